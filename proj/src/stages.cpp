// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#include "gas/stages.hpp"

#include <cmath>
#include <cstring>

#include "gas/common.hpp"

namespace gas {
namespace {

constexpr double kLumaR = 0.2126, kLumaG = 0.7152, kLumaB = 0.0722;
constexpr double kKernelSumFloor = 1e-6;
constexpr double kDenGuard = 1e-12;

void check_tape(bool& used, const char* stage) {
  if (used) fail(ErrorKind::contract, std::string(stage) + ": tape reused");
  used = true;
}

void normalize_taps(const double* raw, int n, double* out, double& sum,
                    const char* which) {
  sum = 0.0;
  for (int i = 0; i < n; ++i) sum += raw[i];
  if (std::fabs(sum) <= kKernelSumFloor)
    fail(ErrorKind::contract,
         std::string("degenerate kernel: ") + which + " sums to ~0");
  for (int i = 0; i < n; ++i) out[i] = raw[i] / sum;
}

// Chain from normalized-tap gradients back to raw taps:
// d(w_i/S)/d w_j = (delta_ij - w_i/S)/S.
void raw_tap_grads(const double* g_norm, const double* norm, int n, double sum,
                   double* g_raw) {
  double dot = 0.0;
  for (int i = 0; i < n; ++i) dot += g_norm[i] * norm[i];
  for (int j = 0; j < n; ++j) g_raw[j] += (g_norm[j] - dot) / sum;
}

}  // namespace

ImageBuf lens_blur_fwd(const ImageBuf& img, const LensBlurParams& p,
                       LensTape* tape) {
  if (img.channels != 3) fail(ErrorKind::shape, "lens blur wants 3 channels");
  double kx[5], ky[5], sx, sy;
  normalize_taps(p.kx, 5, kx, sx, "lens kx");
  normalize_taps(p.ky, 5, ky, sy, "lens ky");
  ImageBuf hpass(img.width, img.height, 3, img.space);
  conv1d_h(img, kx, kLensRadius, hpass);
  ImageBuf out(img.width, img.height, 3, img.space);
  conv1d_v(hpass, ky, kLensRadius, out);
  if (tape) {
    tape->input = img;
    tape->hpass = std::move(hpass);
    std::memcpy(tape->kxn, kx, sizeof(kx));
    std::memcpy(tape->kyn, ky, sizeof(ky));
    tape->sx = sx;
    tape->sy = sy;
    tape->used = false;
  }
  return out;
}

void lens_blur_bwd(const ImageBuf& grad_out, LensTape& tape,
                   ImageBuf& grad_img, LensBlurParams& grad_p) {
  check_tape(tape.used, "lens blur");
  const ImageBuf& img = tape.input;
  // out = conv_v(conv_h(img, kx), ky)
  double g_kyn[5] = {0, 0, 0, 0, 0};
  conv1d_v_weight_grad_add(grad_out, tape.hpass, kLensRadius, g_kyn);
  ImageBuf g_h(img.width, img.height, 3, img.space);
  conv1d_v_adjoint_add(grad_out, tape.kyn, kLensRadius, g_h);
  double g_kxn[5] = {0, 0, 0, 0, 0};
  conv1d_h_weight_grad_add(g_h, img, kLensRadius, g_kxn);
  grad_img = ImageBuf(img.width, img.height, 3, img.space);
  conv1d_h_adjoint_add(g_h, tape.kxn, kLensRadius, grad_img);
  raw_tap_grads(g_kxn, tape.kxn, 5, tape.sx, grad_p.kx);
  raw_tap_grads(g_kyn, tape.kyn, 5, tape.sy, grad_p.ky);
}

ImageBuf color_map_fwd(const ImageBuf& img, const ColorMapParams& p,
                       ColorTape* tape) {
  if (img.channels != 3) fail(ErrorKind::shape, "color map wants 3 channels");
  ImageBuf out(img.width, img.height, 3, img.space);
  const double* r = img.plane(0);
  const double* g = img.plane(1);
  const double* b = img.plane(2);
  const size_t n = img.pixels();
  for (int c = 0; c < 3; ++c) {
    const double m0 = p.m[3 * c], m1 = p.m[3 * c + 1], m2 = p.m[3 * c + 2];
    const double t = p.t[c];
    double* o = out.plane(c);
    for (size_t i = 0; i < n; ++i) o[i] = m0 * r[i] + m1 * g[i] + m2 * b[i] + t;
  }
  if (tape) {
    tape->input = img;
    std::memcpy(tape->m, p.m, sizeof(p.m));
    tape->used = false;
  }
  return out;
}

void color_map_bwd(const ImageBuf& grad_out, ColorTape& tape,
                   ImageBuf& grad_img, ColorMapParams& grad_p) {
  check_tape(tape.used, "color map");
  const ImageBuf& img = tape.input;
  const size_t n = img.pixels();
  grad_img = ImageBuf(img.width, img.height, 3, img.space);
  for (int c = 0; c < 3; ++c) {
    const double* go = grad_out.plane(c);
    double sm[3] = {0, 0, 0}, st = 0;
    for (int in = 0; in < 3; ++in) {
      const double* src = img.plane(in);
      double* gi = grad_img.plane(in);
      const double m = tape.m[3 * c + in];
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        acc += go[i] * src[i];
        gi[i] += m * go[i];
      }
      sm[in] = acc;
    }
    for (size_t i = 0; i < n; ++i) st += go[i];
    for (int in = 0; in < 3; ++in) grad_p.m[3 * c + in] += sm[in];
    grad_p.t[c] += st;
  }
}

ImageBuf glow_mask(const ImageBuf& img, const BloomLevelParams& level,
                   GlowTape* tape) {
  if (img.channels != 3) fail(ErrorKind::shape, "glow mask wants 3 channels");
  const double b = softplus(level.b_raw);
  const double a = level.a;
  ImageBuf lum = luma(img);
  ImageBuf factor(img.width, img.height, 1, img.space);
  const size_t n = img.pixels();
  {
    const double* l = lum.plane(0);
    double* f = factor.plane(0);
    for (size_t i = 0; i < n; ++i) f[i] = sigmoid(b * (l[i] - a));
  }
  ImageBuf out(img.width, img.height, 3, img.space);
  const double* f = factor.plane(0);
  for (int c = 0; c < 3; ++c) {
    const double* src = img.plane(c);
    double* o = out.plane(c);
    for (size_t i = 0; i < n; ++i) o[i] = src[i] * f[i];
  }
  if (tape) {
    tape->input = img;
    tape->lum = std::move(lum);
    tape->factor = std::move(factor);
    tape->a = a;
    tape->b = b;
    tape->b_raw = level.b_raw;
    tape->used = false;
  }
  return out;
}

void glow_mask_bwd(const ImageBuf& grad_out, GlowTape& tape,
                   ImageBuf& grad_img, BloomLevelParams& grad_level) {
  check_tape(tape.used, "glow mask");
  const ImageBuf& img = tape.input;
  const size_t n = img.pixels();
  grad_img = ImageBuf(img.width, img.height, 3, img.space);
  const double* f = tape.factor.plane(0);
  const double* l = tape.lum.plane(0);
  const double lw[3] = {kLumaR, kLumaG, kLumaB};
  double g_a = 0, g_b = 0;
  // out_c = in_c * f, f = sigmoid(b*(L - a)), L = luma(in)
  for (size_t i = 0; i < n; ++i) {
    double gf = 0.0;
    for (int c = 0; c < 3; ++c)
      gf += grad_out.plane(c)[i] * img.plane(c)[i];
    double q = gf * f[i] * (1.0 - f[i]);
    g_b += q * (l[i] - tape.a);
    g_a -= q * tape.b;
    double gl = q * tape.b;
    for (int c = 0; c < 3; ++c)
      grad_img.plane(c)[i] = grad_out.plane(c)[i] * f[i] + lw[c] * gl;
  }
  grad_level.a += g_a;
  grad_level.b_raw += g_b * sigmoid(tape.b_raw);
}

void gaussian_kernel(double logvar, int radius, double* w, double* jac) {
  const int taps = 2 * radius + 1;
  const double var = std::exp(logvar);
  if (var < 1e-12) {
    // Degenerate width: exact impulse with a flat (zero) jacobian; the
    // true jacobian decays faster than any polynomial here.
    for (int i = 0; i < taps; ++i) w[i] = 0.0;
    w[radius] = 1.0;
    if (jac)
      for (int i = 0; i < taps; ++i) jac[i] = 0.0;
    return;
  }
  double sum = 0.0;
  for (int i = 0; i < taps; ++i) {
    int d = i - radius;
    w[i] = std::exp(-0.5 * d * d / var);
    sum += w[i];
  }
  double mu2 = 0.0;
  for (int i = 0; i < taps; ++i) {
    w[i] /= sum;
    int d = i - radius;
    mu2 += w[i] * d * d;
  }
  if (jac) {
    // w_i = e_i / sum, e_i = exp(-d^2/(2 var)), d(var)/d(logvar) = var:
    // d w_i / d logvar = w_i (d_i^2 - mu2) / (2 var).
    for (int i = 0; i < taps; ++i) {
      int d = i - radius;
      jac[i] = w[i] * (d * d - mu2) / (2.0 * var);
    }
  }
}

namespace {

struct ToneConsts {
  double eps, s;
  bool zero_eps;
  double denom;  // expm1(-eps*s), negative for eps,s > 0
};

ToneConsts tone_consts(const BloomToneParams& tone) {
  ToneConsts t;
  t.eps = softplus(tone.eps_raw);
  t.s = softplus(tone.s_raw);
  t.zero_eps = t.eps == 0.0;
  t.denom = t.zero_eps ? 0.0 : std::expm1(-t.eps * t.s);
  return t;
}

// Saturating curve f(z) = (1 - e^(-eps z)) / (1 - e^(-eps s)); f(0) = 0 and
// f(s) = 1 hold exactly because numerator and denominator share the same
// expression. eps -> 0 limit is z/s.
inline double tone_eval(const ToneConsts& t, double z) {
  if (t.zero_eps) return z / t.s;
  return std::expm1(-t.eps * z) / t.denom;
}

}  // namespace

ImageBuf bloom_fwd(const ImageBuf& img,
                   const BloomLevelParams levels[kBloomLevels],
                   const BloomToneParams& tone, BloomTape* tape) {
  if (img.channels != 3) fail(ErrorKind::shape, "bloom wants 3 channels");
  ImageBuf bloom_map(img.width, img.height, 3, img.space);
  ImageBuf cur = img;
  double wx[2 * kBloomRadius + 1], wy[2 * kBloomRadius + 1];
  double jx[2 * kBloomRadius + 1], jy[2 * kBloomRadius + 1];
  for (int l = 0; l < kBloomLevels; ++l) {
    if (l > 0) cur = downsample_half(cur);
    GlowTape gt;
    ImageBuf glow = glow_mask(cur, levels[l], tape ? &gt : nullptr);
    gaussian_kernel(levels[l].logvar_x, kBloomRadius, wx, tape ? jx : nullptr);
    gaussian_kernel(levels[l].logvar_y, kBloomRadius, wy, tape ? jy : nullptr);
    ImageBuf hpass(glow.width, glow.height, 3, glow.space);
    conv1d_h(glow, wx, kBloomRadius, hpass);
    ImageBuf blurred(glow.width, glow.height, 3, glow.space);
    conv1d_v(hpass, wy, kBloomRadius, blurred);
    ImageBuf up = l == 0 ? std::move(blurred)
                         : upsample_bilinear(blurred, img.width, img.height);
    for (size_t i = 0; i < bloom_map.data.size(); ++i)
      bloom_map.data[i] += up.data[i];
    if (tape) {
      tape->levels[l] = cur;
      tape->glow[l] = std::move(gt);
      tape->hpass[l] = std::move(hpass);
      std::memcpy(tape->wx[l], wx, sizeof(wx));
      std::memcpy(tape->wy[l], wy, sizeof(wy));
      std::memcpy(tape->jx[l], jx, sizeof(jx));
      std::memcpy(tape->jy[l], jy, sizeof(jy));
      tape->level_params[l] = levels[l];
    }
  }
  ToneConsts tc = tone_consts(tone);
  ImageBuf out(img.width, img.height, 3, img.space);
  for (size_t i = 0; i < out.data.size(); ++i) {
    double z = img.data[i] + bloom_map.data[i];
    bloom_map.data[i] = z;  // reuse as pre-tone storage
    double f = tone_eval(tc, z);
    out.data[i] = f < 1.0 ? f : 1.0;
  }
  if (tape) {
    tape->pre_tone = std::move(bloom_map);
    tape->tone_params = tone;
    tape->used = false;
  }
  return out;
}

void bloom_bwd(const ImageBuf& grad_out, BloomTape& tape, ImageBuf& grad_img,
               BloomLevelParams grad_levels[kBloomLevels],
               BloomToneParams& grad_tone) {
  check_tape(tape.used, "bloom");
  const int W = tape.levels[0].width, H = tape.levels[0].height;
  ToneConsts tc = tone_consts(tape.tone_params);
  // Tone curve backward; clamped pixels (f >= 1) contribute nothing.
  ImageBuf gz(W, H, 3, grad_out.space);
  double g_eps = 0.0, g_s = 0.0;
  for (size_t i = 0; i < gz.data.size(); ++i) {
    double z = tape.pre_tone.data[i];
    double go = grad_out.data[i];
    if (go == 0.0) continue;
    if (tc.zero_eps) {
      if (z / tc.s >= 1.0) continue;
      gz.data[i] = go / tc.s;
      g_eps += go * z * (tc.s - z) / (2.0 * tc.s);
      g_s += go * (-z / (tc.s * tc.s));
    } else {
      double a = std::expm1(-tc.eps * z);  // same expression as forward
      double b = tc.denom;
      if (a / b >= 1.0) continue;
      double en = 1.0 + a;  // e^(-eps z)
      double es = 1.0 + b;  // e^(-eps s)
      gz.data[i] = go * (-tc.eps * en / b);
      g_eps += go * ((-z * en) * b + a * tc.s * es) / (b * b);
      g_s += go * (a * tc.eps * es / (b * b));
    }
  }
  grad_tone.eps_raw += g_eps * sigmoid(tape.tone_params.eps_raw);
  grad_tone.s_raw += g_s * sigmoid(tape.tone_params.s_raw);

  // z = img + sum_l upsample(B_l): walk levels deep-to-shallow, folding
  // each level's image grad into the next shallower one.
  ImageBuf g_level_img;  // grad wrt tape.levels[l]
  for (int l = kBloomLevels - 1; l >= 0; --l) {
    const ImageBuf& lvl = tape.levels[l];
    ImageBuf gB(lvl.width, lvl.height, 3, grad_out.space);
    if (l == 0) {
      gB = gz;  // level 0 feeds the map at full resolution
    } else {
      upsample_bilinear_adjoint_add(gz, gB);
    }
    // Vertical Gaussian backward
    double gwy[2 * kBloomRadius + 1] = {};
    conv1d_v_weight_grad_add(gB, tape.hpass[l], kBloomRadius, gwy);
    double gly = 0.0;
    for (int i = 0; i < 2 * kBloomRadius + 1; ++i) gly += gwy[i] * tape.jy[l][i];
    grad_levels[l].logvar_y += gly;
    ImageBuf gH(lvl.width, lvl.height, 3, grad_out.space);
    conv1d_v_adjoint_add(gB, tape.wy[l], kBloomRadius, gH);
    // Horizontal Gaussian backward; the conv source was the glow image,
    // reconstructed as input * factor.
    double gwx[2 * kBloomRadius + 1] = {};
    {
      ImageBuf glow(lvl.width, lvl.height, 3, lvl.space);
      const double* f = tape.glow[l].factor.plane(0);
      for (int c = 0; c < 3; ++c) {
        const double* src = lvl.plane(c);
        double* o = glow.plane(c);
        for (size_t i = 0; i < lvl.pixels(); ++i) o[i] = src[i] * f[i];
      }
      conv1d_h_weight_grad_add(gH, glow, kBloomRadius, gwx);
    }
    double glx = 0.0;
    for (int i = 0; i < 2 * kBloomRadius + 1; ++i) glx += gwx[i] * tape.jx[l][i];
    grad_levels[l].logvar_x += glx;
    ImageBuf gGlow(lvl.width, lvl.height, 3, grad_out.space);
    conv1d_h_adjoint_add(gH, tape.wx[l], kBloomRadius, gGlow);
    // Glow mask backward, then fold the deeper level's image grad through
    // the downsample sitting between level l and level l+1.
    ImageBuf gIn;
    glow_mask_bwd(gGlow, tape.glow[l], gIn, grad_levels[l]);
    if (l < kBloomLevels - 1) downsample_half_adjoint_add(g_level_img, gIn);
    g_level_img = std::move(gIn);
  }
  grad_img = std::move(g_level_img);
  for (size_t i = 0; i < grad_img.data.size(); ++i)
    grad_img.data[i] += gz.data[i];
}

ImageBuf noise_fwd(const ImageBuf& img, const NoiseParams& p,
                   const CounterRng& rng, double display_gamma,
                   NoiseTape* tape) {
  const double gam = softplus(p.gamma_raw);
  const double sig = softplus(p.sigma_raw);
  if (gam == 0.0 && sig == 0.0) {
    // Exact zero noise: skip the gamma round trip entirely so the stage is
    // a bitwise identity.
    if (tape) {
      tape->identity = true;
      tape->params = p;
      tape->display_gamma = display_gamma;
      tape->used = false;
    }
    return img;
  }
  const int W = img.width, H = img.height, C = img.channels;
  const double sqg = std::sqrt(gam);
  ImageBuf out(W, H, C, ColorSpace::gamma_encoded);
  if (tape) {
    tape->lin = ImageBuf(W, H, C, ColorSpace::linear);
    tape->n1 = ImageBuf(W, H, C, img.space);
    tape->n2 = ImageBuf(W, H, C, img.space);
    tape->out_lin = ImageBuf(W, H, C, ColorSpace::linear);
  }
  const size_t plane_px = static_cast<size_t>(W) * H;
  for (int c = 0; c < C; ++c) {
    const double* src = img.plane(c);
    double* op = out.plane(c);
    for (size_t i = 0; i < plane_px; ++i) {
      double v = src[i];
      double l = v <= 0.0 ? 0.0 : std::pow(v, display_gamma);
      auto pr = rng.normal_pair_at(c * plane_px + i);
      double ol = l + sqg * std::sqrt(l) * pr.first + sig * pr.second;
      op[i] = ol <= 0.0 ? 0.0 : std::pow(ol, 1.0 / display_gamma);
      if (tape) {
        tape->lin.plane(c)[i] = l;
        tape->n1.plane(c)[i] = pr.first;
        tape->n2.plane(c)[i] = pr.second;
        tape->out_lin.plane(c)[i] = ol;
      }
    }
  }
  if (tape) {
    tape->input = img;
    tape->params = p;
    tape->display_gamma = display_gamma;
    tape->identity = false;
    tape->used = false;
  }
  return out;
}

void noise_bwd(const ImageBuf& grad_out, NoiseTape& tape, ImageBuf& grad_img,
               NoiseParams& grad_p) {
  check_tape(tape.used, "noise");
  if (tape.identity) {
    grad_img = grad_out;
    return;
  }
  const double g = tape.display_gamma;
  const double gam = softplus(tape.params.gamma_raw);
  const double sqg = std::sqrt(gam);
  const ImageBuf& img = tape.input;
  grad_img = ImageBuf(img.width, img.height, img.channels, img.space);
  double g_gam = 0.0, g_sig = 0.0;
  const size_t n = grad_out.data.size();
  for (size_t i = 0; i < n; ++i) {
    double go = grad_out.data[i];
    double ol = tape.out_lin.data[i];
    // re-gamma: out = max(ol, 0)^(1/g); subgradient 0 when clamped
    double d_regamma =
        ol <= 0.0 ? 0.0 : (1.0 / g) * std::pow(ol, 1.0 / g - 1.0);
    double g_ol = go * d_regamma;
    double l = tape.lin.data[i];
    double n1 = tape.n1.data[i];
    double n2 = tape.n2.data[i];
    if (l > 0.0 && gam > 0.0)
      g_gam += g_ol * 0.5 * std::sqrt(l / gam) * n1;
    g_sig += g_ol * n2;
    double g_l = g_ol * (1.0 + n1 * sqg / (2.0 * std::sqrt(std::max(l, kDenGuard))));
    double v = img.data[i];
    double d_lin = v <= 0.0 ? 0.0 : g * std::pow(v, g - 1.0);
    grad_img.data[i] = g_l * d_lin;
  }
  grad_p.gamma_raw += g_gam * sigmoid(tape.params.gamma_raw);
  grad_p.sigma_raw += g_sig * sigmoid(tape.params.sigma_raw);
}

}  // namespace gas
