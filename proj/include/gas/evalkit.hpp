// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "gas/image.hpp"
#include "gas/params.hpp"

namespace gas {

// Per-channel 256-bin histograms over a set of images, built on
// gamma-encoded values in [0, 1] (bin = floor(v * 256), top-clamped).
// finalize() normalizes each channel to sum 1.
struct HistogramSet {
  int channels = 0;
  std::vector<std::array<double, 256>> bins;
  bool finalized = false;

  void add_color(const ImageBuf& img);
  // Mean of |horizontal| and |vertical| forward differences per pixel,
  // per channel; captures blur/noise structure color histograms miss.
  void add_gradient_magnitude(const ImageBuf& img);
  void finalize();
};

// Mean over channels of the 1-D Wasserstein-1 distance, computed as the
// sum of absolute CDF differences times the bin width 1/255 (so point
// masses at the extreme bins are distance 1, a one-bin shift is 1/255).
double hist_distance(const HistogramSet& a, const HistogramSet& b);

struct GradCheckEntry {
  std::string name;
  double analytic = 0;
  double fd = 0;
  double rel_err = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;  // one per pipeline scalar
  double threshold = 0;
  double worst_rel = 0;
  std::string worst_name;
  bool passed = false;
};

// Central-difference check of pipeline_bwd for all 42 scalars on one
// image. The loss is a fixed random-weight sum of output pixels (weights
// from `seed`); noise draws are frozen by construction. Relative error
// |a-f| / max(|a|,|f|,1e-8). Step h trades truncation (worst through the
// steep glow sigmoid) against the rounding floor (worst for the
// near-zero-gradient bloom shape parameters); ~2e-3 balances the two.
GradCheckReport gradcheck(const PipelineParams& p, const ImageBuf& img,
                          uint64_t seed, double h, double threshold);

struct EvalMetrics {
  double source_color = 0;    // source set vs target set, color histograms
  double enhanced_color = 0;  // processed source vs target
  double source_grad = 0;     // same pair, gradient-magnitude histograms
  double enhanced_grad = 0;
  std::string table() const;
  std::string kv_lines() const;
};

// Runs the fused pipeline over every source image (frame index = position
// in sorted order) and reports set-level distances against the target.
EvalMetrics eval_run(const PipelineParams& p, const std::string& source_dir,
                     const std::string& target_dir, uint64_t seed);

}  // namespace gas
