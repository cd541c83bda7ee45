// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#include "gas/image.hpp"

#include <algorithm>
#include <cmath>

#include "gas/common.hpp"
#include "gas/parallel.hpp"

namespace gas {
namespace {

inline int clampi(int v, int lo, int hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

ImageBuf pow_map(const ImageBuf& img, double e, ColorSpace out_space) {
  ImageBuf out(img.width, img.height, img.channels, out_space);
  const size_t n = img.data.size();
  for (size_t i = 0; i < n; ++i) {
    double v = img.data[i];
    if (v < 0.0) fail(ErrorKind::contract, "negative sample in gamma map");
    out.data[i] = std::pow(v, e);
  }
  return out;
}

}  // namespace

ImageBuf to_linear(const ImageBuf& img, double g) {
  return pow_map(img, g, ColorSpace::linear);
}

ImageBuf to_gamma(const ImageBuf& img, double g) {
  return pow_map(img, 1.0 / g, ColorSpace::gamma_encoded);
}

ImageBuf luma(const ImageBuf& img) {
  if (img.channels != 3) fail(ErrorKind::shape, "luma wants 3 channels");
  ImageBuf out(img.width, img.height, 1, img.space);
  const double* r = img.plane(0);
  const double* g = img.plane(1);
  const double* b = img.plane(2);
  double* y = out.plane(0);
  const size_t n = img.pixels();
  for (size_t i = 0; i < n; ++i)
    y[i] = 0.2126 * r[i] + 0.7152 * g[i] + 0.0722 * b[i];
  return out;
}

ImageBuf crop(const ImageBuf& img, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || x0 + w > img.width || y0 + h > img.height)
    fail(ErrorKind::shape, "crop out of bounds");
  ImageBuf out(w, h, img.channels, img.space);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < h; ++y) {
      const double* s = img.plane(c) + static_cast<size_t>(y0 + y) * img.width + x0;
      std::copy(s, s + w, out.plane(c) + static_cast<size_t>(y) * w);
    }
  return out;
}

void crop_adjoint_add(const ImageBuf& grad_crop, int x0, int y0,
                      ImageBuf& grad_full) {
  for (int c = 0; c < grad_crop.channels; ++c)
    for (int y = 0; y < grad_crop.height; ++y) {
      const double* s = grad_crop.plane(c) + static_cast<size_t>(y) * grad_crop.width;
      double* d = grad_full.plane(c) + static_cast<size_t>(y0 + y) * grad_full.width + x0;
      for (int x = 0; x < grad_crop.width; ++x) d[x] += s[x];
    }
}

ImageBuf downsample_half(const ImageBuf& img) {
  int w = (img.width + 1) / 2, h = (img.height + 1) / 2;
  ImageBuf out(w, h, img.channels, img.space);
  for (int c = 0; c < img.channels; ++c) {
    const double* s = img.plane(c);
    double* d = out.plane(c);
    for (int y = 0; y < h; ++y) {
      int y0 = 2 * y, y1 = std::min(2 * y + 1, img.height - 1);
      for (int x = 0; x < w; ++x) {
        int x0 = 2 * x, x1 = std::min(2 * x + 1, img.width - 1);
        d[static_cast<size_t>(y) * w + x] =
            0.25 * (s[static_cast<size_t>(y0) * img.width + x0] +
                    s[static_cast<size_t>(y0) * img.width + x1] +
                    s[static_cast<size_t>(y1) * img.width + x0] +
                    s[static_cast<size_t>(y1) * img.width + x1]);
      }
    }
  }
  return out;
}

void downsample_half_adjoint_add(const ImageBuf& grad_small,
                                 ImageBuf& grad_full) {
  int w = grad_small.width, h = grad_small.height;
  for (int c = 0; c < grad_small.channels; ++c) {
    const double* s = grad_small.plane(c);
    double* d = grad_full.plane(c);
    for (int y = 0; y < h; ++y) {
      int y0 = 2 * y, y1 = std::min(2 * y + 1, grad_full.height - 1);
      for (int x = 0; x < w; ++x) {
        int x0 = 2 * x, x1 = std::min(2 * x + 1, grad_full.width - 1);
        double g = 0.25 * s[static_cast<size_t>(y) * w + x];
        d[static_cast<size_t>(y0) * grad_full.width + x0] += g;
        d[static_cast<size_t>(y0) * grad_full.width + x1] += g;
        d[static_cast<size_t>(y1) * grad_full.width + x0] += g;
        d[static_cast<size_t>(y1) * grad_full.width + x1] += g;
      }
    }
  }
}

LerpCoord bilinear_coord(int dst, int dst_n, int src_n) {
  double p = (dst + 0.5) * (static_cast<double>(src_n) / dst_n) - 0.5;
  if (p < 0.0) p = 0.0;
  double f = std::floor(p);
  int i0 = static_cast<int>(f);
  if (i0 > src_n - 1) i0 = src_n - 1;
  int i1 = std::min(i0 + 1, src_n - 1);
  return {i0, i1, p - i0};
}

ImageBuf upsample_bilinear(const ImageBuf& img, int w, int h) {
  ImageBuf out(w, h, img.channels, img.space);
  std::vector<LerpCoord> xs(static_cast<size_t>(w));
  for (int x = 0; x < w; ++x) xs[x] = bilinear_coord(x, w, img.width);
  for (int c = 0; c < img.channels; ++c) {
    const double* s = img.plane(c);
    double* d = out.plane(c);
    parallel_for(0, h, [&](long y) {
      LerpCoord ly = bilinear_coord(static_cast<int>(y), h, img.height);
      const double* r0 = s + static_cast<size_t>(ly.i0) * img.width;
      const double* r1 = s + static_cast<size_t>(ly.i1) * img.width;
      double* o = d + static_cast<size_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        const LerpCoord& lx = xs[x];
        double top = r0[lx.i0] + lx.t * (r0[lx.i1] - r0[lx.i0]);
        double bot = r1[lx.i0] + lx.t * (r1[lx.i1] - r1[lx.i0]);
        o[x] = top + ly.t * (bot - top);
      }
    });
  }
  return out;
}

void upsample_bilinear_adjoint_add(const ImageBuf& grad_big,
                                   ImageBuf& grad_small) {
  int w = grad_big.width, h = grad_big.height;
  std::vector<LerpCoord> xs(static_cast<size_t>(w));
  for (int x = 0; x < w; ++x) xs[x] = bilinear_coord(x, w, grad_small.width);
  // Scatter form; kept serial so accumulation order is fixed.
  for (int c = 0; c < grad_big.channels; ++c) {
    const double* s = grad_big.plane(c);
    double* d = grad_small.plane(c);
    for (int y = 0; y < h; ++y) {
      LerpCoord ly = bilinear_coord(y, h, grad_small.height);
      double* r0 = d + static_cast<size_t>(ly.i0) * grad_small.width;
      double* r1 = d + static_cast<size_t>(ly.i1) * grad_small.width;
      const double* g = s + static_cast<size_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        const LerpCoord& lx = xs[x];
        double g00 = g[x] * (1.0 - ly.t) * (1.0 - lx.t);
        double g01 = g[x] * (1.0 - ly.t) * lx.t;
        double g10 = g[x] * ly.t * (1.0 - lx.t);
        double g11 = g[x] * ly.t * lx.t;
        r0[lx.i0] += g00;
        r0[lx.i1] += g01;
        r1[lx.i0] += g10;
        r1[lx.i1] += g11;
      }
    }
  }
}

void conv1d_h(const ImageBuf& src, const double* kernel, int radius,
              ImageBuf& dst) {
  const int w = src.width, h = src.height, taps = 2 * radius + 1;
  for (int c = 0; c < src.channels; ++c) {
    const double* s = src.plane(c);
    double* d = dst.plane(c);
    parallel_for(0, h, [&](long y) {
      const double* row = s + static_cast<size_t>(y) * w;
      double* out = d + static_cast<size_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        if (x >= radius && x + radius < w) {
          for (int j = 0; j < taps; ++j) acc += kernel[j] * row[x - radius + j];
        } else {
          for (int j = 0; j < taps; ++j)
            acc += kernel[j] * row[clampi(x - radius + j, 0, w - 1)];
        }
        out[x] = acc;
      }
    });
  }
}

void conv1d_v(const ImageBuf& src, const double* kernel, int radius,
              ImageBuf& dst) {
  const int w = src.width, h = src.height, taps = 2 * radius + 1;
  for (int c = 0; c < src.channels; ++c) {
    const double* s = src.plane(c);
    double* d = dst.plane(c);
    parallel_for(0, h, [&](long y) {
      double* out = d + static_cast<size_t>(y) * w;
      for (int x = 0; x < w; ++x) out[x] = 0.0;
      for (int j = 0; j < taps; ++j) {
        int sy = clampi(static_cast<int>(y) - radius + j, 0, h - 1);
        const double* row = s + static_cast<size_t>(sy) * w;
        double k = kernel[j];
        for (int x = 0; x < w; ++x) out[x] += k * row[x];
      }
    });
  }
}

void conv1d_h_adjoint_add(const ImageBuf& grad_dst, const double* kernel,
                          int radius, ImageBuf& grad_src) {
  const int w = grad_dst.width, h = grad_dst.height, taps = 2 * radius + 1;
  for (int c = 0; c < grad_dst.channels; ++c) {
    const double* g = grad_dst.plane(c);
    double* d = grad_src.plane(c);
    for (int y = 0; y < h; ++y) {
      const double* grow = g + static_cast<size_t>(y) * w;
      double* drow = d + static_cast<size_t>(y) * w;
      for (int x = 0; x < w; ++x)
        for (int j = 0; j < taps; ++j)
          drow[clampi(x - radius + j, 0, w - 1)] += kernel[j] * grow[x];
    }
  }
}

void conv1d_v_adjoint_add(const ImageBuf& grad_dst, const double* kernel,
                          int radius, ImageBuf& grad_src) {
  const int w = grad_dst.width, h = grad_dst.height, taps = 2 * radius + 1;
  for (int c = 0; c < grad_dst.channels; ++c) {
    const double* g = grad_dst.plane(c);
    double* d = grad_src.plane(c);
    for (int y = 0; y < h; ++y) {
      const double* grow = g + static_cast<size_t>(y) * w;
      for (int j = 0; j < taps; ++j) {
        int sy = clampi(y - radius + j, 0, h - 1);
        double* drow = d + static_cast<size_t>(sy) * w;
        double k = kernel[j];
        for (int x = 0; x < w; ++x) drow[x] += k * grow[x];
      }
    }
  }
}

void conv1d_h_weight_grad_add(const ImageBuf& grad_dst, const ImageBuf& src,
                              int radius, double* grad_k) {
  const int w = src.width, h = src.height, taps = 2 * radius + 1;
  for (int c = 0; c < src.channels; ++c) {
    const double* s = src.plane(c);
    const double* g = grad_dst.plane(c);
    for (int y = 0; y < h; ++y) {
      const double* row = s + static_cast<size_t>(y) * w;
      const double* grow = g + static_cast<size_t>(y) * w;
      for (int j = 0; j < taps; ++j) {
        double acc = 0.0;
        for (int x = 0; x < w; ++x)
          acc += grow[x] * row[clampi(x - radius + j, 0, w - 1)];
        grad_k[j] += acc;
      }
    }
  }
}

void conv1d_v_weight_grad_add(const ImageBuf& grad_dst, const ImageBuf& src,
                              int radius, double* grad_k) {
  const int w = src.width, h = src.height, taps = 2 * radius + 1;
  for (int c = 0; c < src.channels; ++c) {
    const double* s = src.plane(c);
    const double* g = grad_dst.plane(c);
    for (int y = 0; y < h; ++y) {
      const double* grow = g + static_cast<size_t>(y) * w;
      for (int j = 0; j < taps; ++j) {
        int sy = clampi(y - radius + j, 0, h - 1);
        const double* row = s + static_cast<size_t>(sy) * w;
        double acc = 0.0;
        for (int x = 0; x < w; ++x) acc += grow[x] * row[x];
        grad_k[j] += acc;
      }
    }
  }
}

}  // namespace gas
