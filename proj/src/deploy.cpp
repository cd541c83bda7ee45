// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#include "gas/deploy.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "gas/common.hpp"
#include "gas/pipeline.hpp"
#include "gas/stages.hpp"

namespace gas {
namespace {

constexpr uint64_t kStreamDeploy = 6;
constexpr int kLutSize = 1024;
constexpr float kLutGammaMax = 1.1f;  // sqrt-domain upper edge

inline float sigmoidf(float x) {
  if (x >= 0.0f) {
    float e = std::exp(-x);
    return 1.0f / (1.0f + e);
  }
  float e = std::exp(x);
  return e / (1.0f + e);
}

// Horizontal stencil with replicate borders; interior loop is written so
// the compiler can vectorize across x without reordering each tap chain.
template <int R>
void conv_h_row(const float* src, int w, const float* k, float* dst) {
  const int taps = 2 * R + 1;
  int lo = R < w ? R : w;
  for (int x = 0; x < lo; ++x) {
    float acc = 0.0f;
    for (int j = 0; j < taps; ++j) {
      int sx = x - R + j;
      sx = sx < 0 ? 0 : (sx >= w ? w - 1 : sx);
      acc += k[j] * src[sx];
    }
    dst[x] = acc;
  }
  for (int x = R; x < w - R; ++x) {
    float acc = 0.0f;
    for (int j = 0; j < taps; ++j) acc += k[j] * src[x - R + j];
    dst[x] = acc;
  }
  for (int x = w - R > R ? w - R : R; x < w; ++x) {
    float acc = 0.0f;
    for (int j = 0; j < taps; ++j) {
      int sx = x - R + j;
      sx = sx < 0 ? 0 : (sx >= w ? w - 1 : sx);
      acc += k[j] * src[sx];
    }
    dst[x] = acc;
  }
}

template <int R>
void conv_h_plane(const float* src, int w, int h, const float* k, float* dst) {
  for (int y = 0; y < h; ++y)
    conv_h_row<R>(src + static_cast<size_t>(y) * w, w, k,
                  dst + static_cast<size_t>(y) * w);
}

// Vertical stencil row: dst[x] = sum_j k[j] * row_j[x] (+ optional add).
template <int R, bool Accumulate>
void conv_v_row(const float* src, int w, int h, int y, const float* k,
                float* dst) {
  const int taps = 2 * R + 1;
  const float* rows[2 * R + 1];
  for (int j = 0; j < taps; ++j) {
    int sy = y - R + j;
    sy = sy < 0 ? 0 : (sy >= h ? h - 1 : sy);
    rows[j] = src + static_cast<size_t>(sy) * w;
  }
  for (int x = 0; x < w; ++x) {
    float acc = 0.0f;
    for (int j = 0; j < taps; ++j) acc += k[j] * rows[j][x];
    if (Accumulate)
      dst[x] += acc;
    else
      dst[x] = acc;
  }
}

void downsample_plane(const float* src, int sw, int sh, float* dst, int dw,
                      int dh) {
  for (int y = 0; y < dh; ++y) {
    int y0 = 2 * y, y1 = 2 * y + 1 < sh ? 2 * y + 1 : sh - 1;
    const float* r0 = src + static_cast<size_t>(y0) * sw;
    const float* r1 = src + static_cast<size_t>(y1) * sw;
    float* d = dst + static_cast<size_t>(y) * dw;
    for (int x = 0; x < dw; ++x) {
      int x0 = 2 * x, x1 = 2 * x + 1 < sw ? 2 * x + 1 : sw - 1;
      d[x] = 0.25f * (r0[x0] + r0[x1] + r1[x0] + r1[x1]);
    }
  }
}

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

uint64_t deploy_frame_stream(uint64_t frame_index) {
  return (kStreamDeploy << 56) | frame_index;
}

CompiledPipeline compile(const PipelineParams& p) {
  CompiledPipeline cp;
  cp.params = p;
  double sx = 0, sy = 0;
  for (int i = 0; i < 5; ++i) sx += p.lens.kx[i];
  for (int i = 0; i < 5; ++i) sy += p.lens.ky[i];
  if (std::fabs(sx) <= 1e-6 || std::fabs(sy) <= 1e-6)
    fail(ErrorKind::contract, "degenerate lens kernel");
  for (int i = 0; i < 5; ++i) cp.kx[i] = static_cast<float>(p.lens.kx[i] / sx);
  for (int i = 0; i < 5; ++i) cp.ky[i] = static_cast<float>(p.lens.ky[i] / sy);
  for (int i = 0; i < 9; ++i) cp.cm[i] = static_cast<float>(p.color.m[i]);
  for (int i = 0; i < 3; ++i) cp.ct[i] = static_cast<float>(p.color.t[i]);
  for (int l = 0; l < 4; ++l) {
    cp.levels[l].a = static_cast<float>(p.bloom_levels[l].a);
    cp.levels[l].b = static_cast<float>(softplus(p.bloom_levels[l].b_raw));
    double w[13];
    gaussian_kernel(p.bloom_levels[l].logvar_x, kBloomRadius, w, nullptr);
    for (int i = 0; i < 13; ++i)
      cp.levels[l].wx[i] = static_cast<float>(w[i]);
    gaussian_kernel(p.bloom_levels[l].logvar_y, kBloomRadius, w, nullptr);
    for (int i = 0; i < 13; ++i)
      cp.levels[l].wy[i] = static_cast<float>(w[i]);
  }
  double eps = softplus(p.bloom_tone.eps_raw);
  double s = softplus(p.bloom_tone.s_raw);
  cp.tone_zero_eps = eps == 0.0;
  cp.tone_eps = static_cast<float>(eps);
  cp.tone_s = static_cast<float>(s);
  cp.tone_denom = static_cast<float>(std::expm1(-eps * s));
  if (cp.tone_zero_eps) {
    cp.tone_k = 0.0;
  } else {
    double e = std::expm1(eps * s);  // e^(eps s) - 1
    cp.tone_k = (e + 1.0) / e;
  }
  cp.noise_gamma = softplus(p.noise.gamma_raw);
  cp.noise_sigma = softplus(p.noise.sigma_raw);
  cp.noise_enabled = !(cp.noise_gamma == 0.0 && cp.noise_sigma == 0.0);
  cp.display_gamma = p.gamma;
  if (cp.noise_enabled) {
    cp.lut_to_lin.resize(kLutSize + 1);
    cp.lut_to_gamma.resize(kLutSize + 1);
    for (int i = 0; i <= kLutSize; ++i) {
      double t = static_cast<double>(i) / kLutSize;
      cp.lut_to_lin[i] =
          static_cast<float>(std::pow(t, cp.display_gamma));
      double r = t * kLutGammaMax;  // sqrt-domain sample
      cp.lut_to_gamma[i] =
          static_cast<float>(std::pow(r * r, 1.0 / cp.display_gamma));
    }
  }
  return cp;
}

namespace {

void ensure_scratch(CompiledPipeline& cp, int w, int h) {
  auto& s = cp.scratch;
  if (s.w == w && s.h == h) return;
  s.w = w;
  s.h = h;
  size_t n = static_cast<size_t>(w) * h;
  for (int c = 0; c < 3; ++c) {
    s.in[c].assign(n, 0.0f);
    s.hp[c].assign(n, 0.0f);
    s.base[c].assign(n, 0.0f);
    s.acc[c].assign(n, 0.0f);
    s.ga[c].assign(n, 0.0f);
    s.gb[c].assign(n, 0.0f);
  }
  s.lum.assign(n, 0.0f);
  int lw = w, lh = h;
  for (int l = 0; l < 3; ++l) {
    lw = (lw + 1) / 2;
    lh = (lh + 1) / 2;
    size_t ln = static_cast<size_t>(lw) * lh;
    for (int c = 0; c < 3; ++c) s.down[l][c].assign(ln, 0.0f);
    s.up_x0[l].assign(static_cast<size_t>(w), 0);
    s.up_tx[l].assign(static_cast<size_t>(w), 0.0f);
    for (int x = 0; x < w; ++x) {
      LerpCoord lc = bilinear_coord(x, w, lw);
      s.up_x0[l][x] = lc.i0;
      s.up_tx[l][x] = static_cast<float>(lc.t);
    }
  }
}

// Glow + separable Gaussian for one pyramid level; the blurred result is
// accumulated into acc (full resolution) through bilinear upsampling for
// levels >= 1, directly for level 0.
void bloom_level(CompiledPipeline& cp, int level, const float* const src[3],
                 int lw, int lh) {
  auto& s = cp.scratch;
  const auto& lv = cp.levels[level];
  size_t ln = static_cast<size_t>(lw) * lh;
  // glow mask into ga
  for (size_t i = 0; i < ln; ++i) {
    float l = 0.2126f * src[0][i] + 0.7152f * src[1][i] + 0.0722f * src[2][i];
    s.lum[i] = sigmoidf(lv.b * (l - lv.a));
  }
  for (int c = 0; c < 3; ++c) {
    for (size_t i = 0; i < ln; ++i) s.ga[c][i] = src[c][i] * s.lum[i];
    conv_h_plane<6>(s.ga[c].data(), lw, lh, lv.wx, s.gb[c].data());
    for (int y = 0; y < lh; ++y)
      conv_v_row<6, false>(s.gb[c].data(), lw, lh, y, lv.wy,
                           s.ga[c].data() + static_cast<size_t>(y) * lw);
  }
  if (level == 0) {
    for (int c = 0; c < 3; ++c) {
      size_t n = static_cast<size_t>(s.w) * s.h;
      for (size_t i = 0; i < n; ++i) s.acc[c][i] += s.ga[c][i];
    }
    return;
  }
  const int* x0 = s.up_x0[level - 1].data();
  const float* tx = s.up_tx[level - 1].data();
  for (int y = 0; y < s.h; ++y) {
    LerpCoord ly = bilinear_coord(y, s.h, lh);
    float ty = static_cast<float>(ly.t);
    for (int c = 0; c < 3; ++c) {
      const float* r0 = s.ga[c].data() + static_cast<size_t>(ly.i0) * lw;
      const float* r1 = s.ga[c].data() + static_cast<size_t>(ly.i1) * lw;
      float* a = s.acc[c].data() + static_cast<size_t>(y) * s.w;
      for (int x = 0; x < s.w; ++x) {
        int i0 = x0[x];
        int i1 = i0 + 1 < lw ? i0 + 1 : lw - 1;
        float t = tx[x];
        float top = r0[i0] + t * (r0[i1] - r0[i0]);
        float bot = r1[i0] + t * (r1[i1] - r1[i0]);
        a[x] += top + ty * (bot - top);
      }
    }
  }
}

inline float lut_lookup(const std::vector<float>& lut, float pos01) {
  float f = pos01 * kLutSize;
  int i = static_cast<int>(f);
  if (i >= kLutSize) i = kLutSize - 1;
  float frac = f - i;
  return lut[i] + frac * (lut[i + 1] - lut[i]);
}

}  // namespace

void run_frame_into(CompiledPipeline& cp, const ImageBuf& img,
                    uint64_t frame_index, uint64_t seed, ImageBuf& out) {
  if (img.channels != 3) fail(ErrorKind::shape, "run_frame wants 3 channels");
  const int w = img.width, h = img.height;
  ensure_scratch(cp, w, h);
  auto& s = cp.scratch;
  const size_t n = static_cast<size_t>(w) * h;
  if (out.width != w || out.height != h || out.channels != 3)
    out = ImageBuf(w, h, 3, ColorSpace::gamma_encoded);
  out.space = ColorSpace::gamma_encoded;

  // Pass A: separable lens blur, then the affine color map in place.
  for (int c = 0; c < 3; ++c) {
    const double* src = img.plane(c);
    for (size_t i = 0; i < n; ++i) s.in[c][i] = static_cast<float>(src[i]);
    conv_h_plane<2>(s.in[c].data(), w, h, cp.kx, s.hp[c].data());
    for (int y = 0; y < h; ++y)
      conv_v_row<2, false>(s.hp[c].data(), w, h, y, cp.ky,
                           s.base[c].data() + static_cast<size_t>(y) * w);
  }
  for (size_t i = 0; i < n; ++i) {
    float r = s.base[0][i], g = s.base[1][i], b = s.base[2][i];
    s.base[0][i] = cp.cm[0] * r + cp.cm[1] * g + cp.cm[2] * b + cp.ct[0];
    s.base[1][i] = cp.cm[3] * r + cp.cm[4] * g + cp.cm[5] * b + cp.ct[1];
    s.base[2][i] = cp.cm[6] * r + cp.cm[7] * g + cp.cm[8] * b + cp.ct[2];
  }

  // Pass B: bloom pyramid accumulated into acc.
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i < n; ++i) s.acc[c][i] = 0.0f;
  {
    const float* base_ptrs[3] = {s.base[0].data(), s.base[1].data(),
                                 s.base[2].data()};
    bloom_level(cp, 0, base_ptrs, w, h);
    int lw = w, lh = h;
    const float* src_ptrs[3] = {base_ptrs[0], base_ptrs[1], base_ptrs[2]};
    for (int l = 1; l < 4; ++l) {
      int dw = (lw + 1) / 2, dh = (lh + 1) / 2;
      for (int c = 0; c < 3; ++c)
        downsample_plane(src_ptrs[c], lw, lh, s.down[l - 1][c].data(), dw, dh);
      const float* dp[3] = {s.down[l - 1][0].data(), s.down[l - 1][1].data(),
                            s.down[l - 1][2].data()};
      bloom_level(cp, l, dp, dw, dh);
      src_ptrs[0] = dp[0];
      src_ptrs[1] = dp[1];
      src_ptrs[2] = dp[2];
      lw = dw;
      lh = dh;
    }
  }

  // Pass C: tone curve, then the sensor noise chain in f64.
  const bool noise = cp.noise_enabled;
  const double g = cp.display_gamma, invg = 1.0 / g;
  const double gam = cp.noise_gamma, sig = cp.noise_sigma;
  CounterRng rng(seed, deploy_frame_stream(frame_index));
  const float eps = cp.tone_eps, denom = cp.tone_denom, tone_s = cp.tone_s;
  const bool zeps = cp.tone_zero_eps;
  const bool lut = cp.use_gamma_lut && noise;
  for (int c = 0; c < 3; ++c) {
    const float* bp = s.base[c].data();
    const float* ap = s.acc[c].data();
    double* op = out.plane(c);
    const uint64_t cbase = static_cast<uint64_t>(c) * n;
    for (size_t i = 0; i < n; ++i) {
      float z = bp[i] + ap[i];
      float t;
      if (zeps)
        t = z / tone_s;
      else
        t = std::expm1(-eps * z) / denom;
      if (t > 1.0f) t = 1.0f;
      if (!noise) {
        op[i] = clamp01(static_cast<double>(t));
        continue;
      }
      double lin;
      if (t <= 0.0f)
        lin = 0.0;
      else if (lut)
        lin = lut_lookup(cp.lut_to_lin, t);
      else
        lin = std::pow(static_cast<double>(t), g);
      auto pr = rng.normal_pair_at(cbase + i);
      double u = lin + std::sqrt(gam * lin) * pr.first + sig * pr.second;
      double v;
      if (u <= 0.0) {
        v = 0.0;
      } else if (lut) {
        float r = std::sqrt(static_cast<float>(u));
        if (u < 1e-6 || r >= kLutGammaMax)
          v = std::pow(u, invg);
        else
          v = lut_lookup(cp.lut_to_gamma, r / kLutGammaMax);
      } else {
        v = std::pow(u, invg);
      }
      op[i] = clamp01(v);
    }
  }
}

ImageBuf run_frame(CompiledPipeline& cp, const ImageBuf& img,
                   uint64_t frame_index, uint64_t seed) {
  ImageBuf out;
  run_frame_into(cp, img, frame_index, seed, out);
  return out;
}

double FrameStats::mean_ms() const {
  double s = 0;
  for (double v : samples_ms) s += v;
  return samples_ms.empty() ? 0.0 : s / samples_ms.size();
}

double FrameStats::std_ms() const {
  if (samples_ms.size() < 2) return 0.0;
  double m = mean_ms(), s = 0;
  for (double v : samples_ms) s += (v - m) * (v - m);
  return std::sqrt(s / (samples_ms.size() - 1));
}

std::string FrameStats::report() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%dx%d %zu %.3f %.3f %.3f %.2f", width,
                height, samples_ms.size(), mean_ms(), std_ms(), ref_mean_ms,
                speedup());
  return buf;
}

FrameStats bench(CompiledPipeline& cp, int width, int height, int frames,
                 uint64_t seed) {
  if (frames < 10) fail(ErrorKind::contract, "bench wants frames >= 10");
  ImageBuf img(width, height, 3, ColorSpace::gamma_encoded);
  for (int c = 0; c < 3; ++c) {
    double* p = img.plane(c);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        p[static_cast<size_t>(y) * width + x] =
            0.5 + 0.5 * std::sin(0.01 * (x + 2 * y) + c);
  }
  FrameStats st;
  st.width = width;
  st.height = height;
  {
    // Coarse traffic model: double-plane input/output, five f32 plane
    // passes for lens+color, per-level glow/blur/accumulate with the
    // pyramid's geometric tail (1 + 1/4 + 1/16 + 1/64 ~ 1.33).
    double f32 = 4.0 * width * height * 3, f64 = 2.0 * f32;
    double lens_color = f64 + 7 * f32;
    double pyramid = 6 * f32 * 1.328 + 2 * f32 * 3.328 + 2 * f32 * 0.328;
    st.bytes_moved = static_cast<uint64_t>(lens_color + pyramid + 2 * f32 + f64);
  }
  ImageBuf out;
  for (int i = 0; i < 3; ++i) run_frame_into(cp, img, i, seed, out);
  for (int i = 0; i < frames; ++i) {
    double t0 = now_ms();
    run_frame_into(cp, img, 3 + i, seed, out);
    st.samples_ms.push_back(now_ms() - t0);
  }
  double rt = 0;
  for (int i = 0; i < frames; ++i) {
    CounterRng rng(seed, deploy_frame_stream(3 + i));
    double t0 = now_ms();
    ImageBuf ref = pipeline_fwd(img, cp.params, rng, nullptr);
    rt += now_ms() - t0;
  }
  st.ref_mean_ms = rt / frames;
  return st;
}

}  // namespace gas
