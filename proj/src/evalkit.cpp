// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#include "gas/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gas/common.hpp"
#include "gas/deploy.hpp"
#include "gas/pipeline.hpp"
#include "gas/rng.hpp"
#include "gas/trainer.hpp"

namespace gas {
namespace {

constexpr uint64_t kStreamGcWeights = (9ull << 56) | 1;
constexpr uint64_t kStreamGcNoise = (9ull << 56) | 2;

inline int bin_of(double v) {
  int b = static_cast<int>(clamp01(v) * 256.0);
  return b > 255 ? 255 : b;
}

void ensure_channels(HistogramSet& hs, int c) {
  if (hs.finalized) fail(ErrorKind::contract, "histogram already finalized");
  if (hs.channels == 0) {
    hs.channels = c;
    hs.bins.assign(static_cast<size_t>(c), {});
  } else if (hs.channels != c) {
    fail(ErrorKind::shape, "histogram channel mismatch");
  }
}

}  // namespace

void HistogramSet::add_color(const ImageBuf& img) {
  ensure_channels(*this, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    const double* p = img.plane(c);
    for (size_t i = 0; i < img.pixels(); ++i) bins[c][bin_of(p[i])] += 1.0;
  }
}

void HistogramSet::add_gradient_magnitude(const ImageBuf& img) {
  ensure_channels(*this, img.channels);
  const int w = img.width, h = img.height;
  for (int c = 0; c < img.channels; ++c) {
    const double* p = img.plane(c);
    for (int y = 0; y < h; ++y) {
      const double* row = p + static_cast<size_t>(y) * w;
      const double* below = p + static_cast<size_t>(y + 1 < h ? y + 1 : y) * w;
      for (int x = 0; x < w; ++x) {
        double dh = x + 1 < w ? std::fabs(row[x + 1] - row[x]) : 0.0;
        double dv = std::fabs(below[x] - row[x]);
        bins[c][bin_of(0.5 * (dh + dv))] += 1.0;
      }
    }
  }
}

void HistogramSet::finalize() {
  if (finalized) return;
  for (auto& h : bins) {
    double total = 0;
    for (double v : h) total += v;
    if (total <= 0) fail(ErrorKind::contract, "empty histogram");
    for (double& v : h) v /= total;
  }
  finalized = true;
}

double hist_distance(const HistogramSet& a, const HistogramSet& b) {
  if (a.channels != b.channels || a.channels == 0)
    fail(ErrorKind::shape, "histogram binning mismatch");
  if (!a.finalized || !b.finalized)
    fail(ErrorKind::contract, "hist_distance wants finalized histograms");
  double total = 0;
  for (int c = 0; c < a.channels; ++c) {
    double ca = 0, cb = 0, w1 = 0;
    for (int i = 0; i < 256; ++i) {
      ca += a.bins[c][i];
      cb += b.bins[c][i];
      w1 += std::fabs(ca - cb);
    }
    total += w1 * (1.0 / 255.0);
  }
  return total / a.channels;
}

GradCheckReport gradcheck(const PipelineParams& p, const ImageBuf& img,
                          uint64_t seed, double h, double threshold) {
  // Loss: fixed random-weight sum over output pixels, so every parameter
  // contributes a generically nonzero gradient.
  CounterRng wrng(seed, kStreamGcWeights);
  ImageBuf w(img.width, img.height, img.channels, img.space);
  for (size_t i = 0; i < w.data.size(); ++i)
    w.data[i] = 2.0 * wrng.uniform_at(i) - 1.0;
  CounterRng nrng(seed, kStreamGcNoise);

  auto loss_at = [&](const PipelineParams& q) {
    ImageBuf out = pipeline_fwd(img, q, nrng, nullptr);
    double l = 0;
    for (size_t i = 0; i < out.data.size(); ++i) l += w.data[i] * out.data[i];
    return l;
  };

  PipelineTape tape;
  ImageBuf out = pipeline_fwd(img, p, nrng, &tape);
  (void)out;
  PipelineGrads grads;
  pipeline_bwd(w, tape, grads);
  auto gptr = param_ptrs(grads.scalars);

  GradCheckReport rep;
  rep.threshold = threshold;
  PipelineParams q = p;
  auto qptr = param_ptrs(q);
  auto pptr = param_ptrs(p);
  for (int i = 0; i < kParamCount; ++i) {
    double v = *pptr[i];
    *qptr[i] = v + h;
    double lp = loss_at(q);
    *qptr[i] = v - h;
    double lm = loss_at(q);
    *qptr[i] = v;
    GradCheckEntry e;
    e.name = param_names()[i];
    e.analytic = *gptr[i];
    e.fd = (lp - lm) / (2.0 * h);
    e.rel_err = std::fabs(e.analytic - e.fd) /
                std::max({std::fabs(e.analytic), std::fabs(e.fd), 1e-8});
    if (e.rel_err >= rep.worst_rel) {
      rep.worst_rel = e.rel_err;
      rep.worst_name = e.name;
    }
    rep.entries.push_back(std::move(e));
  }
  rep.passed = rep.worst_rel <= threshold;
  return rep;
}

std::string EvalMetrics::table() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "metric               source   enhanced\n"
                "color histogram W1   %.6f %.6f\n"
                "gradient-mag W1      %.6f %.6f\n",
                source_color, enhanced_color, source_grad, enhanced_grad);
  return buf;
}

std::string EvalMetrics::kv_lines() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "source_color_w1 %.9f\nenhanced_color_w1 %.9f\n"
                "source_grad_w1 %.9f\nenhanced_grad_w1 %.9f\n",
                source_color, enhanced_color, source_grad, enhanced_grad);
  return buf;
}

EvalMetrics eval_run(const PipelineParams& p, const std::string& source_dir,
                     const std::string& target_dir, uint64_t seed) {
  Dataset src = load_dataset(source_dir);
  Dataset tgt = load_dataset(target_dir);
  HistogramSet src_c, src_g, tgt_c, tgt_g, enh_c, enh_g;
  for (const ImageBuf& im : tgt.images) {
    tgt_c.add_color(im);
    tgt_g.add_gradient_magnitude(im);
  }
  CompiledPipeline cp = compile(p);
  ImageBuf out;
  for (size_t i = 0; i < src.images.size(); ++i) {
    const ImageBuf& im = src.images[i];
    src_c.add_color(im);
    src_g.add_gradient_magnitude(im);
    run_frame_into(cp, im, i, seed, out);
    enh_c.add_color(out);
    enh_g.add_gradient_magnitude(out);
  }
  for (HistogramSet* hs : {&src_c, &src_g, &tgt_c, &tgt_g, &enh_c, &enh_g})
    hs->finalize();
  EvalMetrics m;
  m.source_color = hist_distance(src_c, tgt_c);
  m.enhanced_color = hist_distance(enh_c, tgt_c);
  m.source_grad = hist_distance(src_g, tgt_g);
  m.enhanced_grad = hist_distance(enh_g, tgt_g);
  return m;
}

}  // namespace gas
