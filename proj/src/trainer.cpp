// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#include "gas/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "gas/common.hpp"
#include "gas/kv_file.hpp"
#include "gas/png_io.hpp"

namespace fs = std::filesystem;

namespace gas {
namespace {

// Stream layout: purpose << 56 | step << 16 | slot.
constexpr uint64_t kStreamCrop = 1;
constexpr uint64_t kStreamPipeNoise = 2;
constexpr uint64_t kStreamDiscNoiseD = 3;
constexpr uint64_t kStreamDiscNoiseG = 4;

uint64_t stream_id(uint64_t purpose, uint64_t step, uint64_t slot) {
  return (purpose << 56) | (step << 16) | slot;
}

void check_finite(const double* g, size_t n, const char* what) {
  for (size_t i = 0; i < n; ++i)
    if (!std::isfinite(g[i]))
      fail(ErrorKind::contract, std::string("nan gradient in ") + what);
}

}  // namespace

void adam_step(double* params, const double* grads, size_t n, AdamState& st,
               const AdamConfig& cfg) {
  if (st.m.size() != n) fail(ErrorKind::shape, "adam state size mismatch");
  check_finite(grads, n, "adam");
  ++st.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (size_t i = 0; i < n; ++i) {
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grads[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    double mhat = st.m[i] / bc1;
    double vhat = st.v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void adam_step(double* const* params, const double* grads, size_t n,
               AdamState& st, const AdamConfig& cfg) {
  if (st.m.size() != n) fail(ErrorKind::shape, "adam state size mismatch");
  check_finite(grads, n, "adam");
  ++st.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (size_t i = 0; i < n; ++i) {
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grads[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    double mhat = st.m[i] / bc1;
    double vhat = st.v[i] / bc2;
    *params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

RalsganResult ralsgan_losses(const std::vector<ImageBuf>& real_logits,
                             const std::vector<ImageBuf>& fake_logits) {
  if (real_logits.empty() || fake_logits.empty())
    fail(ErrorKind::contract, "ralsgan: empty logit set");
  RalsganResult r;
  for (const ImageBuf& m : real_logits) {
    for (double v : m.data) r.mean_real += v;
    r.n_real += m.data.size();
  }
  for (const ImageBuf& m : fake_logits) {
    for (double v : m.data) r.mean_fake += v;
    r.n_fake += m.data.size();
  }
  r.mean_real /= static_cast<double>(r.n_real);
  r.mean_fake /= static_cast<double>(r.n_fake);
  double d_real = 0, d_fake = 0, g_fake = 0, g_real = 0;
  for (const ImageBuf& m : real_logits)
    for (double v : m.data) {
      double a = v - r.mean_fake - 1.0;
      double b = v - r.mean_fake + 1.0;
      d_real += a * a;
      g_real += b * b;
    }
  for (const ImageBuf& m : fake_logits)
    for (double v : m.data) {
      double a = v - r.mean_real + 1.0;
      double b = v - r.mean_real - 1.0;
      d_fake += a * a;
      g_fake += b * b;
    }
  r.loss_d = d_real / r.n_real + d_fake / r.n_fake;
  r.loss_g = g_fake / r.n_fake + g_real / r.n_real;
  return r;
}

double ralsgan_dlossd_dreal(double logit, const RalsganResult& r) {
  // d/d real_i of mean((real - f mean - 1)^2), plus the r-mean coupling in
  // the fake term: -2/n_r * mean(fake - r mean + 1).
  double coupled = r.mean_fake - r.mean_real + 1.0;
  return 2.0 / r.n_real * ((logit - r.mean_fake - 1.0) - coupled);
}

double ralsgan_dlossd_dfake(double logit, const RalsganResult& r) {
  double coupled = r.mean_real - r.mean_fake - 1.0;
  return 2.0 / r.n_fake * ((logit - r.mean_real + 1.0) - coupled);
}

double ralsgan_dlossg_dfake(double logit, const RalsganResult& r) {
  double coupled = r.mean_real - r.mean_fake + 1.0;
  return 2.0 / r.n_fake * ((logit - r.mean_real - 1.0) - coupled);
}

Dataset load_dataset(const std::string& dir) {
  Dataset ds;
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    fail(ErrorKind::io, "not a directory: " + dir);
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string p = e.path().string();
    if (e.path().extension() == ".png") ds.paths.push_back(p);
  }
  std::sort(ds.paths.begin(), ds.paths.end());
  if (ds.paths.empty()) fail(ErrorKind::io, "no .png files in " + dir);
  ds.images.reserve(ds.paths.size());
  for (const std::string& p : ds.paths) ds.images.push_back(load_png(p));
  return ds;
}

ImageBuf sample_crop(const Dataset& ds, const CounterRng& rng,
                     uint64_t counter_base, int crop) {
  uint64_t idx = rng.index_at(counter_base, ds.images.size());
  const ImageBuf& img = ds.images[idx];
  if (img.width < crop || img.height < crop)
    fail(ErrorKind::contract, "image smaller than crop: " + ds.paths[idx]);
  uint64_t rx = static_cast<uint64_t>(img.width - crop) + 1;
  uint64_t ry = static_cast<uint64_t>(img.height - crop) + 1;
  int x0 = static_cast<int>(rng.index_at(counter_base + 1, rx));
  int y0 = static_cast<int>(rng.index_at(counter_base + 2, ry));
  return gas::crop(img, x0, y0, crop, crop);
}

namespace {

struct FreezeMask {
  bool lens, color, bloom, noise;
  void apply(PipelineParams& grads) const {
    auto z = [](double* p, int n) {
      for (int i = 0; i < n; ++i) p[i] = 0.0;
    };
    if (lens) {
      z(grads.lens.kx, 5);
      z(grads.lens.ky, 5);
    }
    if (color) {
      z(grads.color.m, 9);
      z(grads.color.t, 3);
    }
    if (bloom) {
      for (auto& lv : grads.bloom_levels) {
        lv.a = lv.b_raw = lv.logvar_x = lv.logvar_y = 0.0;
      }
      grads.bloom_tone.eps_raw = grads.bloom_tone.s_raw = 0.0;
    }
    if (noise) grads.noise.gamma_raw = grads.noise.sigma_raw = 0.0;
  }
};

void write_checkpoint(const TrainConfig& cfg, const PipelineParams& p,
                      const DiscriminatorNet& d, const std::string& tag) {
  if (cfg.out_path.empty()) return;
  save_params(p, cfg.out_path + ".ckpt" + tag);
  save_discriminator(d, cfg.out_path + ".ckpt" + tag + ".disc");
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
  if (cfg.crop - 2 * cfg.edge_crop < 46)
    fail(ErrorKind::contract,
         "crop minus edge crops is below the discriminator receptive field");
  if (cfg.batch < 1) fail(ErrorKind::contract, "batch must be >= 1");
  Dataset source = load_dataset(cfg.source_dir);
  Dataset target = load_dataset(cfg.target_dir);

  TrainResult res;
  res.params = default_init_params();
  res.params.gamma = cfg.gamma;
  res.disc = make_patch_discriminator(cfg.seed);

  AdamConfig g_cfg{cfg.lr_g, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  AdamConfig d_cfg{cfg.lr_d, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  AdamState g_state(kParamCount);
  std::vector<AdamState> dw_state, db_state;
  for (const ConvLayer& l : res.disc.layers) {
    dw_state.emplace_back(l.w.size());
    db_state.emplace_back(l.b.size());
  }

  std::ofstream metrics;
  if (!cfg.metrics_path.empty()) {
    metrics.open(cfg.metrics_path, std::ios::app);
    if (!metrics)
      fail(ErrorKind::io, "cannot open metrics log: " + cfg.metrics_path);
  }

  FreezeMask freeze{cfg.freeze_lens, cfg.freeze_color, cfg.freeze_bloom,
                    cfg.freeze_noise};
  const int inner = cfg.crop - 2 * cfg.edge_crop;
  const int B = cfg.batch;

  double plateau_prev = 0.0;
  double plateau_acc = 0.0;
  long plateau_n = 0;
  bool have_prev_window = false;

  for (long step = 0; step < cfg.steps; ++step) {
    const double t01 =
        cfg.steps > 1 ? static_cast<double>(step) / (cfg.steps - 1) : 0.0;
    res.disc.instance_noise_sigma =
        cfg.instance_noise_start +
        (cfg.instance_noise_end - cfg.instance_noise_start) * t01;
    const double lr_scale = 1.0 - (1.0 - cfg.lr_final_frac) * t01;
    g_cfg.lr = cfg.lr_g * lr_scale;
    d_cfg.lr = cfg.lr_d * lr_scale;

    // Crops for this step. Source feeds the pipeline; target is "real".
    CounterRng crop_rng_s(cfg.seed, stream_id(kStreamCrop, step, 0));
    CounterRng crop_rng_t(cfg.seed, stream_id(kStreamCrop, step, 1));
    std::vector<ImageBuf> fakes, reals;
    std::vector<PipelineTape> tapes(B);
    for (int i = 0; i < B; ++i) {
      ImageBuf src = sample_crop(source, crop_rng_s, i * 4, cfg.crop);
      CounterRng noise_rng(cfg.seed, stream_id(kStreamPipeNoise, step, i));
      ImageBuf fake = pipeline_fwd(src, res.params, noise_rng, &tapes[i]);
      fakes.push_back(
          crop(fake, cfg.edge_crop, cfg.edge_crop, inner, inner));
      ImageBuf tgt = sample_crop(target, crop_rng_t, i * 4, cfg.crop);
      reals.push_back(crop(tgt, cfg.edge_crop, cfg.edge_crop, inner, inner));
    }

    // --- discriminator update ---
    for (ConvLayer& l : res.disc.layers) spectral_normalize(l, true);
    std::vector<DiscTape> dtapes_r(B), dtapes_f(B);
    std::vector<ImageBuf> logits_r, logits_f;
    for (int i = 0; i < B; ++i) {
      CounterRng nr(cfg.seed, stream_id(kStreamDiscNoiseD, step, 2 * i));
      logits_r.push_back(
          disc_fwd(reals[i], res.disc, nr, true, &dtapes_r[i]));
      CounterRng nf(cfg.seed, stream_id(kStreamDiscNoiseD, step, 2 * i + 1));
      logits_f.push_back(
          disc_fwd(fakes[i], res.disc, nf, true, &dtapes_f[i]));
    }
    RalsganResult rl = ralsgan_losses(logits_r, logits_f);
    res.last_loss_d = rl.loss_d;
    res.last_loss_g = rl.loss_g;
    if (!std::isfinite(rl.loss_d) || !std::isfinite(rl.loss_g)) {
      write_checkpoint(cfg, res.params, res.disc, "_nan_halt");
      res.nan_halted = true;
      res.steps_done = step;
      return res;
    }
    DiscGrads dgrads = make_grads_like(res.disc);
    for (int i = 0; i < B; ++i) {
      ImageBuf gl = logits_r[i];
      for (double& v : gl.data) v = ralsgan_dlossd_dreal(v, rl);
      disc_bwd(gl, res.disc, dtapes_r[i], &dgrads, nullptr);
    }
    for (int i = 0; i < B; ++i) {
      ImageBuf gl = logits_f[i];
      for (double& v : gl.data) v = ralsgan_dlossd_dfake(v, rl);
      disc_bwd(gl, res.disc, dtapes_f[i], &dgrads, nullptr);
    }
    bool bad = false;
    for (const auto& lg : dgrads.layers) {
      for (double v : lg.w)
        if (!std::isfinite(v)) bad = true;
      for (double v : lg.b)
        if (!std::isfinite(v)) bad = true;
    }
    if (bad) {
      write_checkpoint(cfg, res.params, res.disc, "_nan_halt");
      res.nan_halted = true;
      res.steps_done = step;
      return res;
    }
    for (size_t li = 0; li < res.disc.layers.size(); ++li) {
      ConvLayer& l = res.disc.layers[li];
      adam_step(l.w.data(), dgrads.layers[li].w.data(), l.w.size(),
                dw_state[li], d_cfg);
      adam_step(l.b.data(), dgrads.layers[li].b.data(), l.b.size(),
                db_state[li], d_cfg);
    }
    // Refresh normalized weights against the updated raws; the power
    // iteration itself already ran this step.
    for (ConvLayer& l : res.disc.layers) spectral_normalize(l, false);

    // --- generator (pipeline) update ---
    std::vector<DiscTape> gtapes(B);
    std::vector<ImageBuf> glogits_r, glogits_f;
    for (int i = 0; i < B; ++i) {
      CounterRng nr(cfg.seed, stream_id(kStreamDiscNoiseG, step, 2 * i));
      glogits_r.push_back(disc_fwd(reals[i], res.disc, nr, true, nullptr));
      CounterRng nf(cfg.seed, stream_id(kStreamDiscNoiseG, step, 2 * i + 1));
      glogits_f.push_back(
          disc_fwd(fakes[i], res.disc, nf, true, &gtapes[i]));
    }
    RalsganResult gl_res = ralsgan_losses(glogits_r, glogits_f);
    res.last_loss_g = gl_res.loss_g;
    PipelineGrads pg;
    for (int i = 0; i < B; ++i) {
      ImageBuf gl = glogits_f[i];
      for (double& v : gl.data) v = ralsgan_dlossg_dfake(v, gl_res);
      ImageBuf g_cropped;
      disc_bwd(gl, res.disc, gtapes[i], nullptr, &g_cropped);
      ImageBuf g_full(cfg.crop, cfg.crop, 3, g_cropped.space);
      crop_adjoint_add(g_cropped, cfg.edge_crop, cfg.edge_crop, g_full);
      pipeline_bwd(g_full, tapes[i], pg);
    }
    freeze.apply(pg.scalars);
    auto ptrs = param_ptrs(res.params);
    auto gptrs = param_ptrs(pg.scalars);
    double flat[kParamCount];
    for (int i = 0; i < kParamCount; ++i) flat[i] = *gptrs[i];
    bool gbad = false;
    for (double v : flat)
      if (!std::isfinite(v)) gbad = true;
    if (gbad) {
      write_checkpoint(cfg, res.params, res.disc, "_nan_halt");
      res.nan_halted = true;
      res.steps_done = step;
      return res;
    }
    adam_step(ptrs.data(), flat, kParamCount, g_state, g_cfg);

    if (metrics.is_open()) {
      metrics << step << ' ' << format_f64(rl.loss_d) << ' '
              << format_f64(gl_res.loss_g) << ' '
              << format_f64(res.disc.instance_noise_sigma) << '\n';
      metrics.flush();
    }
    res.steps_done = step + 1;
    if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 &&
        step + 1 < cfg.steps)
      write_checkpoint(cfg, res.params, res.disc,
                       std::to_string(step + 1));

    if (cfg.early_stop) {
      plateau_acc += gl_res.loss_g;
      if (++plateau_n == cfg.plateau_window) {
        double avg = plateau_acc / plateau_n;
        if (have_prev_window &&
            std::fabs(avg - plateau_prev) <
                cfg.plateau_rel * std::fabs(plateau_prev))
          break;
        plateau_prev = avg;
        have_prev_window = true;
        plateau_acc = 0.0;
        plateau_n = 0;
      }
    }
  }

  if (!cfg.out_path.empty()) save_params(res.params, cfg.out_path);
  return res;
}

}  // namespace gas
