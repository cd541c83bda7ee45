// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "gas/common.hpp"
#include "gas/evalkit.hpp"
#include "gas/kv_file.hpp"
#include "gas/params.hpp"
#include "gas/png_io.hpp"
#include "gas/rng.hpp"

using namespace gas;
namespace fs = std::filesystem;

namespace {

ImageBuf const_image(int w, int h, int c, double v) {
  ImageBuf img(w, h, c, ColorSpace::gamma_encoded);
  for (double& x : img.data) x = v;
  return img;
}

ImageBuf random_image(int w, int h, int c, uint64_t seed, double lo = 0.0,
                      double hi = 1.0) {
  ImageBuf img(w, h, c, ColorSpace::gamma_encoded);
  CounterRng rng(seed, 951);
  for (size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = lo + (hi - lo) * rng.uniform_at(i);
  return img;
}

HistogramSet color_hist(const ImageBuf& img) {
  HistogramSet h;
  h.add_color(img);
  h.finalize();
  return h;
}

// One pixel per bin of a 200-bin-wide uniform block starting at `first`.
ImageBuf uniform_block(int first) {
  ImageBuf img(200, 1, 1);
  for (int i = 0; i < 200; ++i)
    img.plane(0)[i] = (first + i + 0.5) / 256.0;
  return img;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path("gas_ek_" + name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  std::string file(const std::string& n) const { return (path / n).string(); }
};

}  // namespace

// -------------------------------------------------------------- histograms

TEST_CASE("color binning: floor(v*256), top bin clamped") {
  ImageBuf img(4, 1, 1);
  img.plane(0)[0] = 0.0;
  img.plane(0)[1] = 0.5;
  img.plane(0)[2] = 1.0;   // would index 256; clamps to 255
  img.plane(0)[3] = 1.0 / 256.0;
  HistogramSet h;
  h.add_color(img);
  CHECK(h.bins[0][0] == 1.0);
  CHECK(h.bins[0][128] == 1.0);
  CHECK(h.bins[0][255] == 1.0);
  CHECK(h.bins[0][1] == 1.0);
}

TEST_CASE("finalized channels sum to one") {
  HistogramSet h;
  h.add_color(random_image(31, 17, 3, 1));
  h.add_color(random_image(8, 9, 3, 2));
  h.finalize();
  for (int c = 0; c < 3; ++c) {
    double s = 0;
    for (double v : h.bins[c]) s += v;
    CHECK(std::fabs(s - 1.0) < 1e-9);
  }
  h.finalize();  // idempotent
  CHECK(h.finalized);
}

TEST_CASE("histogram misuse is rejected") {
  HistogramSet h;
  h.add_color(random_image(4, 4, 3, 3));
  CHECK_THROWS_AS(h.add_color(random_image(4, 4, 1, 4)), Error);
  h.finalize();
  CHECK_THROWS_AS(h.add_color(random_image(4, 4, 3, 5)), Error);
  HistogramSet empty;
  empty.add_color(ImageBuf(0, 0, 2));
  CHECK_THROWS_AS(empty.finalize(), Error);
}

TEST_CASE("gradient magnitude bins mean forward differences") {
  ImageBuf img(3, 1, 1);
  img.plane(0)[0] = 0.0;
  img.plane(0)[1] = 0.3;
  img.plane(0)[2] = 0.5;
  HistogramSet h;
  h.add_gradient_magnitude(img);
  // Per pixel 0.5*(|dh|+|dv|): 0.15, 0.10, 0.0 -> bins 38, 25, 0.
  CHECK(h.bins[0][38] == 1.0);
  CHECK(h.bins[0][25] == 1.0);
  CHECK(h.bins[0][0] == 1.0);
  HistogramSet flat;
  flat.add_gradient_magnitude(const_image(16, 16, 1, 0.7));
  CHECK(flat.bins[0][0] == 256.0);  // constant image: all mass at zero
}

// ---------------------------------------------------------- hist_distance

TEST_CASE("distance of a set to itself is zero") {
  HistogramSet a = color_hist(random_image(32, 32, 3, 6));
  HistogramSet b = color_hist(random_image(32, 32, 3, 6));
  CHECK(hist_distance(a, b) == 0.0);
}

TEST_CASE("opposite point masses are at distance one") {
  HistogramSet lo = color_hist(const_image(2, 2, 1, 0.0));
  HistogramSet hi = color_hist(const_image(2, 2, 1, 1.0));
  CHECK(hist_distance(lo, hi) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("uniform block shifted by k bins is at distance k/255") {
  for (int k : {1, 7, 30}) {
    HistogramSet a = color_hist(uniform_block(0));
    HistogramSet b = color_hist(uniform_block(k));
    CHECK(hist_distance(a, b) ==
          doctest::Approx(k / 255.0).epsilon(1e-12));
  }
}

TEST_CASE("metric properties: symmetry exact, triangle on random triples") {
  for (uint64_t s = 0; s < 10; ++s) {
    HistogramSet a = color_hist(random_image(16, 16, 3, 10 + s));
    HistogramSet b = color_hist(random_image(16, 16, 3, 30 + s));
    HistogramSet c = color_hist(random_image(16, 16, 3, 50 + s));
    double ab = hist_distance(a, b);
    CHECK(ab == hist_distance(b, a));
    CHECK(hist_distance(a, c) <= ab + hist_distance(b, c) + 1e-12);
  }
}

TEST_CASE("distance rejects mismatched or unfinalized sets") {
  HistogramSet rgb = color_hist(random_image(8, 8, 3, 70));
  HistogramSet gray = color_hist(random_image(8, 8, 1, 71));
  CHECK_THROWS_AS(hist_distance(rgb, gray), Error);
  HistogramSet raw;
  raw.add_color(random_image(8, 8, 3, 72));
  CHECK_THROWS_AS(hist_distance(rgb, raw), Error);
}

// -------------------------------------------------------------- gradcheck

TEST_CASE("identity init passes the full 42-parameter gradient check") {
  ImageBuf img = random_image(16, 16, 3, 80, 0.1, 0.9);
  GradCheckReport rep =
      gradcheck(default_init_params(), img, 1, 2e-3, 1e-3);
  REQUIRE(rep.entries.size() == static_cast<size_t>(kParamCount));
  const auto& names = param_names();
  for (int i = 0; i < kParamCount; ++i) {
    INFO(rep.entries[i].name, " rel ", rep.entries[i].rel_err);
    CHECK(rep.entries[i].name == names[i]);
    CHECK(rep.entries[i].rel_err <= 1e-3);
  }
  CHECK(rep.passed);
  CHECK(rep.threshold == 1e-3);
  double worst = 0;
  for (const auto& e : rep.entries) worst = std::max(worst, e.rel_err);
  CHECK(rep.worst_rel == worst);
  CHECK_FALSE(rep.worst_name.empty());
}

TEST_CASE("halving the step does not blow up the errors") {
  ImageBuf img = random_image(16, 16, 3, 81, 0.1, 0.9);
  PipelineParams p = default_init_params();
  GradCheckReport full = gradcheck(p, img, 2, 2e-3, 1e-3);
  GradCheckReport half = gradcheck(p, img, 2, 1e-3, 1e-3);
  CHECK(half.worst_rel <= 10.0 * full.worst_rel);
}

TEST_CASE("failures carry the parameter path, not just a flag") {
  ImageBuf img = random_image(12, 12, 3, 82, 0.1, 0.9);
  GradCheckReport rep =
      gradcheck(default_init_params(), img, 3, 2e-3, 1e-12);
  CHECK_FALSE(rep.passed);  // threshold below the fd noise floor
  CHECK(rep.worst_name.find('.') != std::string::npos);  // e.g. lens.kx[0]
}

// --------------------------------------------------------------- eval_run

TEST_CASE("eval_run: target equal to source scores near zero everywhere") {
  TempDir dir("same");
  for (int i = 0; i < 3; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "i%d.png", i);
    save_png(dir.file(name), random_image(32, 32, 3, 90 + i));
  }
  EvalMetrics m =
      eval_run(exact_identity_params(), dir.str(), dir.str(), 1);
  CHECK(m.source_color <= 1e-3);
  CHECK(m.enhanced_color <= 1e-3);
  CHECK(m.source_grad <= 1e-3);
  CHECK(m.enhanced_grad <= 1e-3);
}

TEST_CASE("identity params leave the distances unchanged") {
  TempDir src("src"), tgt("tgt");
  for (int i = 0; i < 3; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "i%d.png", i);
    save_png(src.file(name), random_image(32, 32, 3, 100 + i, 0.0, 0.8));
    save_png(tgt.file(name), random_image(32, 32, 3, 110 + i, 0.2, 1.0));
  }
  EvalMetrics m = eval_run(exact_identity_params(), src.str(), tgt.str(), 1);
  CHECK(m.source_color > 1e-3);  // the sets genuinely differ
  CHECK(std::fabs(m.enhanced_color - m.source_color) <= 1e-3);
  CHECK(std::fabs(m.enhanced_grad - m.source_grad) <= 1e-3);
}

TEST_CASE("eval_run propagates dataset io errors") {
  TempDir tgt("only_tgt");
  save_png(tgt.file("a.png"), random_image(8, 8, 3, 120));
  CHECK_THROWS_AS(
      eval_run(default_init_params(), "gas_ek_missing", tgt.str(), 1), Error);
}

TEST_CASE("metrics render as a table and as key-value lines") {
  EvalMetrics m;
  m.source_color = 0.25;
  m.enhanced_color = 0.125;
  m.source_grad = 0.0625;
  m.enhanced_grad = 0.03125;
  std::string table = m.table();
  CHECK(table.find("color histogram W1") != std::string::npos);
  CHECK(table.find("0.250000") != std::string::npos);
  KvDoc doc = KvDoc::parse(m.kv_lines());
  CHECK(doc.get_f64("source_color_w1") == doctest::Approx(0.25));
  CHECK(doc.get_f64("enhanced_color_w1") == doctest::Approx(0.125));
  CHECK(doc.get_f64("source_grad_w1") == doctest::Approx(0.0625));
  CHECK(doc.get_f64("enhanced_grad_w1") == doctest::Approx(0.03125));
}
