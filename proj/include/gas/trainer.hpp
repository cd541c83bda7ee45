// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "gas/discriminator.hpp"
#include "gas/params.hpp"
#include "gas/pipeline.hpp"

namespace gas {

struct TrainConfig {
  std::string source_dir;
  std::string target_dir;
  std::string out_path;          // final params file
  std::string metrics_path;      // per-step loss log, append-only
  int crop = 256;
  int edge_crop = 16;
  int batch = 4;
  long steps = 2000;
  double lr_g = 1e-4;
  double lr_d = 1e-4;
  double adam_beta1 = 0.5;       // GAN-friendly momentum
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double instance_noise_start = 0.2;
  double instance_noise_end = 0.0;
  double lr_final_frac = 1.0;    // both lrs decay linearly to lr*frac
  uint64_t seed = 0;
  long checkpoint_every = 0;     // 0: only final
  double gamma = 2.2;
  bool freeze_lens = false;
  bool freeze_color = false;
  bool freeze_bloom = false;
  bool freeze_noise = false;
  bool early_stop = false;       // loss-plateau stop, off by default
  long plateau_window = 500;
  double plateau_rel = 0.01;
};

struct AdamConfig {
  double lr = 1e-4, beta1 = 0.5, beta2 = 0.999, eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
  explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Bias-corrected ADAM on a contiguous block. Rejects non-finite grads.
void adam_step(double* params, const double* grads, size_t n, AdamState& st,
               const AdamConfig& cfg);
// Same update through an array of scalar locations (the 42-param view).
void adam_step(double* const* params, const double* grads, size_t n,
               AdamState& st, const AdamConfig& cfg);

struct RalsganResult {
  double loss_d = 0, loss_g = 0;
  double mean_real = 0, mean_fake = 0;
  size_t n_real = 0, n_fake = 0;
};

// Relativistic least-squares losses over patch logit maps:
// loss_d = mean((real - mean_fake - 1)^2) + mean((fake - mean_real + 1)^2)
// loss_g = mean((fake - mean_real - 1)^2) + mean((real - mean_fake + 1)^2)
RalsganResult ralsgan_losses(const std::vector<ImageBuf>& real_logits,
                             const std::vector<ImageBuf>& fake_logits);

// Per-logit loss derivatives (cross-mean terms included).
double ralsgan_dlossd_dreal(double logit, const RalsganResult& r);
double ralsgan_dlossd_dfake(double logit, const RalsganResult& r);
double ralsgan_dlossg_dfake(double logit, const RalsganResult& r);

struct Dataset {
  std::vector<ImageBuf> images;
  std::vector<std::string> paths;  // sorted; index-aligned with images
};

// Loads every .png in dir, sorted by name for run-to-run determinism.
Dataset load_dataset(const std::string& dir);

ImageBuf sample_crop(const Dataset& ds, const CounterRng& rng,
                     uint64_t counter_base, int crop);

struct TrainResult {
  PipelineParams params;
  DiscriminatorNet disc;
  long steps_done = 0;
  bool nan_halted = false;
  double last_loss_d = 0, last_loss_g = 0;
};

// Full adversarial loop; see TrainConfig for every knob. Writes the final
// params to out_path, periodic checkpoints to out_path.ckpt<N> (+ .disc),
// and one `step loss_d loss_g noise_sigma` line per step to metrics_path.
TrainResult train(const TrainConfig& config);

}  // namespace gas
