// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gas/params.hpp"
#include "gas/rng.hpp"

namespace gas {

// Inference-only compilation of PipelineParams: all per-frame-invariant
// math (kernel normalization, softplus/exp mappings, tone constants, gamma
// tables) hoisted out of the pixel loops. Frame math runs in f32 except the
// per-sample noise chain, which stays in f64 to track the reference path
// through the gamma decode/encode pair.
struct CompiledPipeline {
  PipelineParams params;  // kept for the reference path and re-compiles

  float kx[5], ky[5];           // normalized lens taps
  float cm[9], ct[3];           // color map
  struct Level {
    float a, b;
    float wx[13], wy[13];
  } levels[4];
  bool tone_zero_eps;
  float tone_eps, tone_s;
  float tone_denom;     // expm1(-eps*s)
  double tone_k;        // e^(eps s) / (e^(eps s) - 1), the hoisted scale
  double noise_gamma, noise_sigma;
  bool noise_enabled;
  double display_gamma;

  bool use_gamma_lut = true;
  std::vector<float> lut_to_lin;    // t in [0,1] -> t^g
  std::vector<float> lut_to_gamma;  // sqrt(u) in [0,1.1] -> u^(1/g)

  // Scratch planes, sized on first frame of a given resolution; steady
  // state does no per-frame allocation.
  struct Scratch {
    int w = 0, h = 0;
    std::vector<float> in[3], hp[3], base[3], acc[3];
    std::vector<float> down[3][3];   // pyramid levels 1..3
    std::vector<float> ga[3], gb[3]; // per-level work (glow/blur)
    std::vector<float> lum;
    std::vector<int> up_x0[3];
    std::vector<float> up_tx[3];
  } scratch;
};

CompiledPipeline compile(const PipelineParams& p);

// The rng stream a given frame draws its sensor noise from; the reference
// path must use the same stream to reproduce the draws.
uint64_t deploy_frame_stream(uint64_t frame_index);

// Fused forward pass, mathematically matching pipeline_fwd with
// train_mode=false and the frame's rng stream. Deterministic per
// (frame_index, seed). `out` is resized as needed; with a correctly sized
// `out` and warm scratch the call does not allocate.
void run_frame_into(CompiledPipeline& cp, const ImageBuf& img,
                    uint64_t frame_index, uint64_t seed, ImageBuf& out);
ImageBuf run_frame(CompiledPipeline& cp, const ImageBuf& img,
                   uint64_t frame_index, uint64_t seed);

struct FrameStats {
  int width = 0, height = 0;
  std::vector<double> samples_ms;
  double ref_mean_ms = 0;
  uint64_t bytes_moved = 0;  // per-frame traffic estimate of the pass plan
  double mean_ms() const;
  double std_ms() const;
  double speedup() const { return ref_mean_ms / mean_ms(); }
  std::string report() const;  // "WxH frames mean_ms std_ms ref_mean_ms speedup"
};

// Times run_frame on synthetic frames (3 warm-up rounds first), then the
// reference path on the same workload.
FrameStats bench(CompiledPipeline& cp, int width, int height, int frames,
                 uint64_t seed);

}  // namespace gas
