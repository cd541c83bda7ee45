// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>

#include "gas/image.hpp"

namespace gas {

// Raw (pre-activation) learnable parameters. Positive quantities live as
// softplus inputs, variances as log-variances, so gradient descent is
// unconstrained. Mapping to effective values happens inside each stage.
struct LensBlurParams {
  // 5-tap separable kernel taps; normalized to sum 1 in the forward pass.
  double kx[5] = {0, 0, 1, 0, 0};
  double ky[5] = {0, 0, 1, 0, 0};
};

struct ColorMapParams {
  double m[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major 3x3
  double t[3] = {0, 0, 0};
};

struct BloomLevelParams {
  double a = 1.5;       // glow threshold (luma units)
  double b_raw = 0.0;   // softplus -> sigmoid steepness
  double logvar_x = 0;  // log of Gaussian blur variance, x axis
  double logvar_y = 0;
};

struct BloomToneParams {
  double eps_raw = 0.0;  // softplus -> exposure
  double s_raw = 0.0;    // softplus -> saturation point
};

struct NoiseParams {
  double gamma_raw = 0.0;  // softplus -> Poisson-approx gain
  double sigma_raw = 0.0;  // softplus -> Gaussian std
};

struct PipelineParams {
  LensBlurParams lens;
  ColorMapParams color;
  BloomLevelParams bloom_levels[4];
  BloomToneParams bloom_tone;
  NoiseParams noise;
  double gamma = 2.2;  // display gamma; fixed hyperparameter, not learned
};

inline constexpr int kParamCount = 42;

// Canonical flat view over the 42 learnable scalars. Order matches the
// parameter file layout and gradcheck reports.
std::array<double*, kParamCount> param_ptrs(PipelineParams& p);
std::array<const double*, kParamCount> param_ptrs(const PipelineParams& p);
const std::array<std::string, kParamCount>& param_names();

// Gradients mirror the parameter layout; input-image grad rides along.
struct PipelineGrads {
  PipelineParams scalars;  // reused as a 42-slot carrier; gamma unused
  ImageBuf input;
  PipelineGrads() {
    for (double* p : param_ptrs(scalars)) *p = 0.0;
  }
};

// Documented starting point: impulse lens, identity color, bloom shaped but
// seeing no glow on [0,1] content, noise effectively off.
PipelineParams default_init_params();

// Strict identity: every stage short-circuits bitwise for [0,1] input.
PipelineParams exact_identity_params();

void save_params(const PipelineParams& p, const std::string& path);
PipelineParams load_params(const std::string& path);

}  // namespace gas
