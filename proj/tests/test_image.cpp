// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gas/common.hpp"
#include "gas/image.hpp"
#include "gas/rng.hpp"

using namespace gas;

namespace {

ImageBuf random_image(int w, int h, int c, uint64_t seed, double lo = 0.0,
                      double hi = 1.0) {
  ImageBuf img(w, h, c, ColorSpace::gamma_encoded);
  CounterRng rng(seed, 555);
  for (size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = lo + (hi - lo) * rng.uniform_at(i);
  return img;
}

double dot(const ImageBuf& a, const ImageBuf& b) {
  double s = 0;
  for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

double max_abs_diff(const ImageBuf& a, const ImageBuf& b) {
  REQUIRE(a.same_shape(b));
  double m = 0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace

TEST_CASE("gamma maps: fixed points, inverse pair, reference value") {
  ImageBuf img = random_image(9, 5, 3, 1);
  img.data[0] = 0.0;
  img.data[1] = 1.0;
  img.data[2] = 0.5;
  ImageBuf lin = to_linear(img, 2.2);
  CHECK(lin.space == ColorSpace::linear);
  CHECK(lin.data[0] == 0.0);
  CHECK(lin.data[1] == 1.0);
  CHECK(lin.data[2] == doctest::Approx(std::pow(0.5, 2.2)).epsilon(1e-12));
  CHECK(std::pow(0.5, 2.2) == doctest::Approx(0.21764).epsilon(1e-4));
  ImageBuf back = to_gamma(lin, 2.2);
  CHECK(back.space == ColorSpace::gamma_encoded);
  CHECK(max_abs_diff(back, img) < 1e-6);
}

TEST_CASE("gamma maps reject negative samples") {
  ImageBuf img(2, 1, 3);
  img.data[0] = -0.25;
  CHECK_THROWS_AS(to_linear(img, 2.2), Error);
  CHECK_THROWS_AS(to_gamma(img, 2.2), Error);
}

TEST_CASE("luma weights") {
  ImageBuf img(2, 1, 3);
  img.at(0, 0, 0) = 1;
  img.at(1, 0, 0) = 1;
  img.at(2, 0, 0) = 1;  // white
  img.at(0, 0, 1) = 1;  // pure red
  ImageBuf y = luma(img);
  CHECK(y.channels == 1);
  CHECK(y.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(y.at(0, 0, 1) == doctest::Approx(0.2126).epsilon(1e-12));
}

TEST_CASE("luma matches scalar oracle on random image") {
  ImageBuf img = random_image(13, 7, 3, 2);
  ImageBuf y = luma(img);
  for (int r = 0; r < 7; ++r)
    for (int x = 0; x < 13; ++x) {
      double want = 0.2126 * img.at(0, r, x) + 0.7152 * img.at(1, r, x) +
                    0.0722 * img.at(2, r, x);
      CHECK(y.at(0, r, x) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("crop basics and composition") {
  ImageBuf img = random_image(8, 6, 3, 3);
  ImageBuf full = crop(img, 0, 0, 8, 6);
  CHECK(max_abs_diff(full, img) == 0.0);
  ImageBuf two(2, 1, 3);
  two.at(0, 0, 0) = 0.25;
  two.at(0, 0, 1) = 0.75;
  CHECK(crop(two, 1, 0, 1, 1).at(0, 0, 0) == 0.75);
  ImageBuf nested = crop(crop(img, 1, 2, 6, 4), 2, 1, 3, 2);
  ImageBuf direct = crop(img, 3, 3, 3, 2);
  CHECK(max_abs_diff(nested, direct) == 0.0);
  CHECK_THROWS_AS(crop(img, 5, 0, 8, 2), Error);
}

TEST_CASE("crop adjoint identity") {
  ImageBuf x = random_image(8, 6, 3, 4);
  ImageBuf y = random_image(3, 2, 3, 5);
  ImageBuf cx = crop(x, 2, 1, 3, 2);
  ImageBuf aty(8, 6, 3);
  crop_adjoint_add(y, 2, 1, aty);
  CHECK(dot(cx, y) == doctest::Approx(dot(x, aty)).epsilon(1e-12));
}

TEST_CASE("downsample: block means, mean preservation, constants") {
  ImageBuf img(4, 4, 1);
  img.at(0, 0, 0) = 0;
  img.at(0, 0, 1) = 0;
  img.at(0, 1, 0) = 1;
  img.at(0, 1, 1) = 1;
  ImageBuf d = downsample_half(img);
  CHECK(d.width == 2);
  CHECK(d.height == 2);
  CHECK(d.at(0, 0, 0) == doctest::Approx(0.5).epsilon(1e-12));

  ImageBuf r = random_image(16, 10, 3, 6);
  ImageBuf dr = downsample_half(r);
  double m1 = 0, m2 = 0;
  for (double v : r.data) m1 += v;
  for (double v : dr.data) m2 += v;
  CHECK(m1 / r.data.size() == doctest::Approx(m2 / dr.data.size()).epsilon(1e-12));

  ImageBuf c(5, 3, 3);
  for (double& v : c.data) v = 0.37;
  ImageBuf dc = downsample_half(c);
  CHECK(dc.width == 3);
  CHECK(dc.height == 2);
  for (double v : dc.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
  ImageBuf up = upsample_bilinear(c, 9, 7);
  for (double v : up.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("odd-dimension downsample averages available samples") {
  ImageBuf img(3, 1, 1);
  img.at(0, 0, 0) = 0.0;
  img.at(0, 0, 1) = 0.4;
  img.at(0, 0, 2) = 0.8;
  ImageBuf d = downsample_half(img);
  CHECK(d.width == 2);
  // Trailing cell replicates the last column: mean(0.8, 0.8).
  CHECK(d.at(0, 0, 0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(d.at(0, 0, 1) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("resampling adjoints satisfy the dot-product identity") {
  ImageBuf x = random_image(11, 7, 3, 7);
  ImageBuf y = random_image(6, 4, 3, 8);
  ImageBuf dx = downsample_half(x);
  ImageBuf atd(11, 7, 3);
  downsample_half_adjoint_add(y, atd);
  CHECK(dot(dx, y) == doctest::Approx(dot(x, atd)).epsilon(1e-10));

  ImageBuf big = random_image(23, 15, 3, 9);
  ImageBuf ux = upsample_bilinear(x, 23, 15);
  ImageBuf atu(11, 7, 3);
  upsample_bilinear_adjoint_add(big, atu);
  CHECK(dot(ux, big) == doctest::Approx(dot(x, atu)).epsilon(1e-10));
}

TEST_CASE("resampling is linear") {
  ImageBuf a = random_image(10, 6, 3, 10);
  ImageBuf b = random_image(10, 6, 3, 11);
  ImageBuf combo(10, 6, 3);
  for (size_t i = 0; i < combo.data.size(); ++i)
    combo.data[i] = 2.5 * a.data[i] - 1.25 * b.data[i];
  ImageBuf f_combo = upsample_bilinear(combo, 17, 9);
  ImageBuf fa = upsample_bilinear(a, 17, 9);
  ImageBuf fb = upsample_bilinear(b, 17, 9);
  for (size_t i = 0; i < f_combo.data.size(); ++i)
    CHECK(f_combo.data[i] ==
          doctest::Approx(2.5 * fa.data[i] - 1.25 * fb.data[i]).epsilon(1e-10));
}

TEST_CASE("upsample to same size is the identity") {
  ImageBuf img = random_image(9, 5, 3, 12);
  CHECK(max_abs_diff(upsample_bilinear(img, 9, 5), img) == 0.0);
}

TEST_CASE("bilinear coordinates: center mapping and edge clamp") {
  // Doubling: destination 0 maps to source -0.25, clamped to the edge.
  LerpCoord c0 = bilinear_coord(0, 8, 4);
  CHECK(c0.i0 == 0);
  CHECK(c0.t == doctest::Approx(0.0));
  LerpCoord c1 = bilinear_coord(1, 8, 4);
  CHECK(c1.i0 == 0);
  CHECK(c1.t == doctest::Approx(0.25).epsilon(1e-12));
  LerpCoord last = bilinear_coord(7, 8, 4);
  CHECK(last.i1 == 3);
}

TEST_CASE("horizontal conv matches brute force with replicate borders") {
  ImageBuf img = random_image(9, 9, 3, 13);
  double k[5] = {0.1, -0.2, 0.6, 0.3, 0.2};
  ImageBuf out(9, 9, 3);
  conv1d_h(img, k, 2, out);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) {
        double want = 0;
        for (int j = -2; j <= 2; ++j) {
          int sx = std::min(std::max(x + j, 0), 8);
          want += k[j + 2] * img.at(c, y, sx);
        }
        CHECK(out.at(c, y, x) == doctest::Approx(want).epsilon(1e-12));
      }
}

TEST_CASE("separable conv equals dense 2D convolution with outer product") {
  ImageBuf img = random_image(9, 9, 3, 14);
  double kx[5] = {0.05, 0.25, 0.4, 0.2, 0.1};
  double ky[5] = {0.1, 0.2, 0.4, 0.2, 0.1};
  ImageBuf h(9, 9, 3), out(9, 9, 3);
  conv1d_h(img, kx, 2, h);
  conv1d_v(h, ky, 2, out);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) {
        double want = 0;
        for (int dy = -2; dy <= 2; ++dy)
          for (int dx = -2; dx <= 2; ++dx) {
            int sy = std::min(std::max(y + dy, 0), 8);
            int sx = std::min(std::max(x + dx, 0), 8);
            want += ky[dy + 2] * kx[dx + 2] * img.at(c, sy, sx);
          }
        CHECK(out.at(c, y, x) == doctest::Approx(want).epsilon(1e-10));
      }
}

TEST_CASE("conv adjoints and weight grads against the dot identity") {
  ImageBuf x = random_image(12, 8, 3, 15);
  ImageBuf y = random_image(12, 8, 3, 16);
  double k[5] = {0.3, -0.1, 0.5, 0.2, 0.4};
  for (bool horizontal : {true, false}) {
    ImageBuf cx(12, 8, 3);
    horizontal ? conv1d_h(x, k, 2, cx) : conv1d_v(x, k, 2, cx);
    ImageBuf aty(12, 8, 3);
    horizontal ? conv1d_h_adjoint_add(y, k, 2, aty)
               : conv1d_v_adjoint_add(y, k, 2, aty);
    CHECK(dot(cx, y) == doctest::Approx(dot(x, aty)).epsilon(1e-10));

    // d<conv(x;k), y>/dk_j via weight-grad must match finite differences.
    double gk[5] = {0, 0, 0, 0, 0};
    horizontal ? conv1d_h_weight_grad_add(y, x, 2, gk)
               : conv1d_v_weight_grad_add(y, x, 2, gk);
    for (int j = 0; j < 5; ++j) {
      double h = 1e-6, kp[5], km[5];
      for (int i = 0; i < 5; ++i) kp[i] = km[i] = k[i];
      kp[j] += h;
      km[j] -= h;
      ImageBuf op(12, 8, 3), om(12, 8, 3);
      horizontal ? conv1d_h(x, kp, 2, op) : conv1d_v(x, kp, 2, op);
      horizontal ? conv1d_h(x, km, 2, om) : conv1d_v(x, km, 2, om);
      double fd = (dot(op, y) - dot(om, y)) / (2 * h);
      CHECK(gk[j] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}
