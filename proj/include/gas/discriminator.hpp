// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "gas/image.hpp"
#include "gas/rng.hpp"

namespace gas {

struct ConvLayer {
  int in_ch = 0, out_ch = 0, k = 0, stride = 1;
  double leaky_slope = 0.2;
  bool linear_output = false;  // final layer: no activation
  std::vector<double> w;       // out_ch x in_ch x k x k
  std::vector<double> b;       // out_ch
  std::vector<double> sn_u;    // persistent power-iteration vector, out_ch
  // Refreshed by spectral_normalize; consumed by fwd/bwd.
  std::vector<double> w_norm;
  double sn_sigma = 1.0;
};

struct DiscriminatorNet {
  std::vector<ConvLayer> layers;
  double instance_noise_sigma = 0.0;
};

struct DiscTape {
  // Per layer: the conv input actually seen (after noise injection) and the
  // pre-activation output.
  std::vector<ImageBuf> inputs;
  std::vector<ImageBuf> preact;
  bool used = false;
};

struct DiscGrads {
  struct Layer {
    std::vector<double> w, b;
  };
  std::vector<Layer> layers;
};

// One power-iteration step on the matricized weight (rows = out_ch) using
// the persistent u, then divides by the estimated top singular value
// (floored at 1e-12). update_u=false refreshes w_norm/sigma against the
// current weights without advancing the iteration (used right after an
// optimizer step within the same training iteration).
void spectral_normalize(ConvLayer& layer, bool update_u = true);

// Valid (no padding) strided convolutions over spectral-normalized weights.
// train_mode adds N(0, sigma^2) to the input and to every hidden
// activation, never to the output logits. Returns the patch logit map.
ImageBuf disc_fwd(const ImageBuf& img, const DiscriminatorNet& net,
                  const CounterRng& rng, bool train_mode, DiscTape* tape);

// Backprop with the spectral-norm scale treated as a constant. Either
// output may be null when unneeded (saves the corresponding work).
void disc_bwd(const ImageBuf& grad_logits, const DiscriminatorNet& net,
              DiscTape& tape, DiscGrads* grad_params, ImageBuf* grad_input);

// Canonical patch discriminator: 4x4 kernels, channels 3-64-128-256-1,
// strides 2,2,2,1, leaky slope 0.2. Weights N(0, 0.02^2) from the seed.
DiscriminatorNet make_patch_discriminator(uint64_t seed);

DiscGrads make_grads_like(const DiscriminatorNet& net);

void save_discriminator(const DiscriminatorNet& net, const std::string& path);
DiscriminatorNet load_discriminator(const std::string& path);

// Receptive field of one logit in input pixels (46 for the canonical net).
int receptive_field(const DiscriminatorNet& net);

}  // namespace gas
