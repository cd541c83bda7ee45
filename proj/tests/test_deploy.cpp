// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <new>

#include "gas/common.hpp"
#include "gas/deploy.hpp"
#include "gas/pipeline.hpp"
#include "gas/rng.hpp"

using namespace gas;

// Global allocation counter for the no-alloc-after-warm-up check.
namespace {
long g_live_allocs = 0;
}
void* operator new(std::size_t n) {
  ++g_live_allocs;
  void* p = std::malloc(n ? n : 1);
  if (!p) throw std::bad_alloc();
  return p;
}
void* operator new[](std::size_t n) { return ::operator new(n); }
void operator delete(void* p) noexcept { std::free(p); }
void operator delete(void* p, std::size_t) noexcept { std::free(p); }
void operator delete[](void* p) noexcept { std::free(p); }
void operator delete[](void* p, std::size_t) noexcept { std::free(p); }

namespace {

ImageBuf random_image(int w, int h, uint64_t seed, double lo = 0.0,
                      double hi = 1.0) {
  ImageBuf img(w, h, 3, ColorSpace::gamma_encoded);
  CounterRng rng(seed, 941);
  for (size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = lo + (hi - lo) * rng.uniform_at(i);
  return img;
}

// Moderate random parameters covering blur, color, bloom and tone ranges
// the trainer actually visits; noise optional.
PipelineParams random_params(uint64_t seed, bool with_noise) {
  CounterRng rng(seed, 942);
  size_t c = 0;
  auto u = [&](double lo, double hi) {
    return lo + (hi - lo) * rng.uniform_at(c++);
  };
  PipelineParams p = default_init_params();
  for (int i = 0; i < 5; ++i) {
    p.lens.kx[i] = (i == 2 ? 1.0 : 0.0) + u(-0.1, 0.15);
    p.lens.ky[i] = (i == 2 ? 1.0 : 0.0) + u(-0.1, 0.15);
  }
  for (int i = 0; i < 9; ++i)
    p.color.m[i] = (i % 4 == 0 ? u(0.8, 1.05) : u(-0.05, 0.05));
  for (int i = 0; i < 3; ++i) p.color.t[i] = u(-0.03, 0.05);
  for (auto& lv : p.bloom_levels) {
    lv.a = u(0.1, 0.5);
    lv.b_raw = u(0.3, 2.0);
    lv.logvar_x = u(-1.5, 1.0);
    lv.logvar_y = u(-1.5, 1.0);
  }
  p.bloom_tone.eps_raw = u(-1.0, 1.2);
  p.bloom_tone.s_raw = u(0.5, 2.5);
  if (with_noise) {
    p.noise.gamma_raw = u(-9.0, -4.0);
    p.noise.sigma_raw = u(-9.0, -4.0);
  } else {
    p.noise.gamma_raw = -HUGE_VAL;
    p.noise.sigma_raw = -HUGE_VAL;
  }
  return p;
}

double max_abs_diff(const ImageBuf& a, const ImageBuf& b) {
  REQUIRE(a.data.size() == b.data.size());
  double m = 0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

ImageBuf reference_frame(const ImageBuf& img, const PipelineParams& p,
                         uint64_t frame, uint64_t seed) {
  CounterRng rng(seed, deploy_frame_stream(frame));
  return pipeline_fwd(img, p, rng, nullptr);
}

}  // namespace

// ----------------------------------------------------------------- compile

TEST_CASE("identity init compiles to exact impulse kernels") {
  CompiledPipeline cp = compile(default_init_params());
  for (int i = 0; i < 5; ++i) {
    CHECK(cp.kx[i] == (i == 2 ? 1.0f : 0.0f));
    CHECK(cp.ky[i] == (i == 2 ? 1.0f : 0.0f));
  }
}

TEST_CASE("compiling twice yields identical constants") {
  PipelineParams p = random_params(1, true);
  CompiledPipeline a = compile(p), b = compile(p);
  for (int i = 0; i < 5; ++i) {
    CHECK(a.kx[i] == b.kx[i]);
    CHECK(a.ky[i] == b.ky[i]);
  }
  for (int i = 0; i < 9; ++i) CHECK(a.cm[i] == b.cm[i]);
  for (int i = 0; i < 3; ++i) CHECK(a.ct[i] == b.ct[i]);
  for (int l = 0; l < 4; ++l) {
    CHECK(a.levels[l].a == b.levels[l].a);
    CHECK(a.levels[l].b == b.levels[l].b);
    for (int i = 0; i < 13; ++i) {
      CHECK(a.levels[l].wx[i] == b.levels[l].wx[i]);
      CHECK(a.levels[l].wy[i] == b.levels[l].wy[i]);
    }
  }
  CHECK(a.tone_k == b.tone_k);
  CHECK(a.tone_eps == b.tone_eps);
  CHECK(a.tone_s == b.tone_s);
  CHECK(a.noise_gamma == b.noise_gamma);
  CHECK(a.noise_sigma == b.noise_sigma);
  CHECK(a.lut_to_lin == b.lut_to_lin);
  CHECK(a.lut_to_gamma == b.lut_to_gamma);
}

TEST_CASE("hoisted tone scale matches its closed form") {
  PipelineParams p = default_init_params();
  p.bloom_tone.eps_raw = inv_softplus(0.5);
  p.bloom_tone.s_raw = inv_softplus(1.0);
  CompiledPipeline cp = compile(p);
  double want = std::exp(0.5) / (std::exp(0.5) - 1.0);  // ~2.5415
  CHECK(std::fabs(cp.tone_k - 2.5415) < 1e-3);
  CHECK(cp.tone_k == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("degenerate lens kernels are rejected at compile time") {
  PipelineParams p = default_init_params();
  for (double& v : p.lens.kx) v = 0.0;
  CHECK_THROWS_AS(compile(p), Error);
}

// --------------------------------------------------------------- run_frame

TEST_CASE("noise-off fused path tracks the reference within 1e-5") {
  PipelineParams p = random_params(2, false);
  CompiledPipeline cp = compile(p);
  ImageBuf img = random_image(96, 72, 3);
  ImageBuf fused = run_frame(cp, img, 0, 11);
  ImageBuf ref = reference_frame(img, p, 0, 11);
  CHECK(max_abs_diff(fused, ref) <= 1e-5);
}

TEST_CASE("same frame index and seed reproduce bitwise") {
  PipelineParams p = random_params(3, true);
  CompiledPipeline cp = compile(p);
  ImageBuf img = random_image(64, 48, 4);
  ImageBuf a = run_frame(cp, img, 7, 42);
  ImageBuf b = run_frame(cp, img, 7, 42);
  CHECK(a.data == b.data);
  CompiledPipeline cp2 = compile(p);  // fresh compile, same constants
  ImageBuf c = run_frame(cp2, img, 7, 42);
  CHECK(a.data == c.data);
  ImageBuf d = run_frame(cp, img, 8, 42);
  CHECK(max_abs_diff(a, d) > 0.0);
}

TEST_CASE("fused and reference paths agree on 50 random param/image pairs") {
  const int sizes[4][2] = {{64, 48}, {37, 23}, {33, 64}, {128, 96}};
  for (int i = 0; i < 50; ++i) {
    bool with_noise = i % 2 == 1;
    PipelineParams p = random_params(100 + static_cast<uint64_t>(i), with_noise);
    CompiledPipeline cp = compile(p);
    const int* sz = sizes[i % 4];
    ImageBuf img = random_image(sz[0], sz[1], 200 + static_cast<uint64_t>(i));
    ImageBuf fused = run_frame(cp, img, static_cast<uint64_t>(i), 5);
    ImageBuf ref = reference_frame(img, p, static_cast<uint64_t>(i), 5);
    double diff = max_abs_diff(fused, ref);
    INFO("pair ", i, " noise ", with_noise, " diff ", diff);
    CHECK(diff <= (with_noise ? 1e-4 : 1e-5));
  }
}

TEST_CASE("direct pow path (lut disabled) stays within tolerance") {
  PipelineParams p = random_params(6, true);
  CompiledPipeline cp = compile(p);
  cp.use_gamma_lut = false;
  ImageBuf img = random_image(64, 48, 7);
  ImageBuf fused = run_frame(cp, img, 3, 9);
  ImageBuf ref = reference_frame(img, p, 3, 9);
  CHECK(max_abs_diff(fused, ref) <= 1e-4);
}

TEST_CASE("scratch survives resolution changes") {
  PipelineParams p = random_params(8, false);
  CompiledPipeline cp = compile(p);
  for (auto [w, h] : {std::pair{64, 48}, {31, 27}, {64, 48}}) {
    ImageBuf img = random_image(w, h, 300 + static_cast<uint64_t>(w));
    ImageBuf fused = run_frame(cp, img, 0, 2);
    ImageBuf ref = reference_frame(img, p, 0, 2);
    CHECK(max_abs_diff(fused, ref) <= 1e-5);
  }
}

TEST_CASE("run_frame wants 3 channels") {
  CompiledPipeline cp = compile(default_init_params());
  ImageBuf gray(8, 8, 1);
  CHECK_THROWS_AS(run_frame(cp, gray, 0, 0), Error);
}

TEST_CASE("consecutive frames on a static input differ only by noise") {
  PipelineParams p = exact_identity_params();
  p.noise.gamma_raw = inv_softplus(0.01);
  p.noise.sigma_raw = inv_softplus(0.005);
  CompiledPipeline cp = compile(p);
  ImageBuf img = random_image(320, 240, 10, 0.4, 0.7);
  ImageBuf a = run_frame(cp, img, 0, 77);
  ImageBuf b = run_frame(cp, img, 1, 77);
  const double g = p.gamma;
  // Mean linear intensity of the noiseless output; the identity params
  // make that the input itself.
  double ibar = 0;
  for (double v : img.data) ibar += std::pow(v, g);
  ibar /= static_cast<double>(img.data.size());
  double mean = 0, var = 0;
  std::vector<double> d(a.data.size());
  for (size_t i = 0; i < a.data.size(); ++i) {
    d[i] = std::pow(a.data[i], g) - std::pow(b.data[i], g);
    mean += d[i];
  }
  mean /= static_cast<double>(d.size());
  for (double v : d) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d.size() - 1);
  double want = 2.0 * (0.01 * ibar + 0.005 * 0.005);
  CHECK(std::fabs(mean) < 1e-3);
  CHECK(std::fabs(var - want) / want < 0.1);
}

TEST_CASE("steady state does not allocate") {
  PipelineParams p = random_params(9, true);
  CompiledPipeline cp = compile(p);
  ImageBuf img = random_image(96, 64, 12);
  ImageBuf out;
  run_frame_into(cp, img, 0, 1, out);  // sizes scratch and out
  long before = g_live_allocs;
  run_frame_into(cp, img, 1, 1, out);
  run_frame_into(cp, img, 2, 1, out);
  long after = g_live_allocs;
  CHECK(after == before);
}

// ------------------------------------------------------------------- bench

TEST_CASE("bench records one sample per frame and sane stats") {
  CompiledPipeline cp = compile(random_params(13, true));
  FrameStats st = bench(cp, 160, 120, 10, 1);
  CHECK(st.width == 160);
  CHECK(st.height == 120);
  REQUIRE(st.samples_ms.size() == 10);
  double m = 0;
  for (double v : st.samples_ms) m += v;
  m /= 10.0;
  CHECK(st.mean_ms() == doctest::Approx(m).epsilon(1e-12));
  CHECK(st.mean_ms() > 0.0);
  CHECK(st.ref_mean_ms > 0.0);
  CHECK(st.bytes_moved > 0);
  int w = 0, h = 0;
  size_t frames = 0;
  double mean = 0, sd = 0, ref = 0, speed = 0;
  REQUIRE(std::sscanf(st.report().c_str(), "%dx%d %zu %lf %lf %lf %lf", &w,
                      &h, &frames, &mean, &sd, &ref, &speed) == 7);
  CHECK(w == 160);
  CHECK(h == 120);
  CHECK(frames == 10);
  CHECK(speed == doctest::Approx(st.speedup()).epsilon(1e-2));
}

TEST_CASE("bench rejects tiny frame counts") {
  CompiledPipeline cp = compile(default_init_params());
  CHECK_THROWS_AS(bench(cp, 64, 64, 5, 1), Error);
}

TEST_CASE("frame time grows with pixel count") {
  CompiledPipeline cp = compile(random_params(14, true));
  FrameStats small = bench(cp, 320, 180, 10, 1);
  FrameStats big = bench(cp, 960, 540, 10, 1);
  CHECK(big.mean_ms() > small.mean_ms());  // 9x the pixels
}
