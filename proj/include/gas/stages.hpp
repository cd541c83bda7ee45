// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gas/image.hpp"
#include "gas/params.hpp"
#include "gas/rng.hpp"

namespace gas {

// Every stage: out = fwd(img, params[, rng]). Passing a tape pointer caches
// the intermediates backward needs; pass nullptr on inference paths (no
// allocations beyond the output). Tapes are single-use: the matching bwd
// call consumes them and a second call is a contract error.

inline constexpr int kLensRadius = 2;    // 5-tap separable kernel
inline constexpr int kBloomRadius = 6;   // 13-tap Gaussian per level
inline constexpr int kBloomLevels = 4;

struct LensTape {
  ImageBuf input;
  ImageBuf hpass;          // after horizontal kernel
  double kxn[5], kyn[5];   // normalized kernels
  double sx = 0, sy = 0;   // raw sums
  bool used = false;
};

struct ColorTape {
  ImageBuf input;
  double m[9];
  bool used = false;
};

struct GlowTape {
  ImageBuf input;
  ImageBuf factor;  // sigmoid(b*(luma - a)), single channel
  ImageBuf lum;
  double a = 0, b = 0, b_raw = 0;
  bool used = false;
};

struct BloomTape {
  ImageBuf levels[kBloomLevels];   // progressively downsampled input
  GlowTape glow[kBloomLevels];
  ImageBuf hpass[kBloomLevels];    // glow after horizontal Gaussian
  double wx[kBloomLevels][2 * kBloomRadius + 1];
  double wy[kBloomLevels][2 * kBloomRadius + 1];
  double jx[kBloomLevels][2 * kBloomRadius + 1];  // d w / d logvar
  double jy[kBloomLevels][2 * kBloomRadius + 1];
  ImageBuf pre_tone;               // z = img + bloom map
  BloomLevelParams level_params[kBloomLevels];
  BloomToneParams tone_params;
  bool used = false;
};

struct NoiseTape {
  ImageBuf input;
  ImageBuf lin;
  ImageBuf n1, n2;      // frozen standard-normal draws
  ImageBuf out_lin;     // before the max(.,0) and re-gamma
  NoiseParams params;
  double display_gamma = 2.2;
  bool identity = false;  // gamma == sigma == 0 short-circuit
  bool used = false;
};

// Separable 5-tap blur; kernels are raw taps normalized to sum 1 on the
// fly. Raw sums with magnitude <= 1e-6 are rejected as degenerate.
ImageBuf lens_blur_fwd(const ImageBuf& img, const LensBlurParams& p,
                       LensTape* tape);
void lens_blur_bwd(const ImageBuf& grad_out, LensTape& tape,
                   ImageBuf& grad_img, LensBlurParams& grad_p);

// Per-pixel affine map out = M rgb + t, unclamped.
ImageBuf color_map_fwd(const ImageBuf& img, const ColorMapParams& p,
                       ColorTape* tape);
void color_map_bwd(const ImageBuf& grad_out, ColorTape& tape,
                   ImageBuf& grad_img, ColorMapParams& grad_p);

// Soft bright-region extraction: img * sigmoid(b*(luma - a)), factor
// broadcast over channels. b comes through softplus of the stored raw.
ImageBuf glow_mask(const ImageBuf& img, const BloomLevelParams& level,
                   GlowTape* tape);
void glow_mask_bwd(const ImageBuf& grad_out, GlowTape& tape,
                   ImageBuf& grad_img, BloomLevelParams& grad_level);

// Normalized discrete Gaussian, sigma^2 = exp(logvar), and the analytic
// jacobian of each tap wrt logvar. Arrays hold 2*radius+1 entries.
void gaussian_kernel(double logvar, int radius, double* w, double* jac);

// Multi-resolution glow: per level downsample, mask, separable Gaussian,
// upsample; summed map added to the input and sent through the saturating
// tone curve min(expm1(-eps*z)/expm1(-eps*s), 1) applied per channel.
ImageBuf bloom_fwd(const ImageBuf& img,
                   const BloomLevelParams levels[kBloomLevels],
                   const BloomToneParams& tone, BloomTape* tape);
void bloom_bwd(const ImageBuf& grad_out, BloomTape& tape, ImageBuf& grad_img,
               BloomLevelParams grad_levels[kBloomLevels],
               BloomToneParams& grad_tone);

// Sensor noise in linear space: decode by display_gamma, add
// sqrt(gamma*lin)*n1 + sigma*n2, re-encode. Draw s for channel c, pixel
// (y,x) uses the rng normal pair at index c*H*W + y*W + x, so any path
// that knows the pixel coordinate reproduces the same values.
ImageBuf noise_fwd(const ImageBuf& img, const NoiseParams& p,
                   const CounterRng& rng, double display_gamma,
                   NoiseTape* tape);
void noise_bwd(const ImageBuf& grad_out, NoiseTape& tape, ImageBuf& grad_img,
               NoiseParams& grad_p);

}  // namespace gas
