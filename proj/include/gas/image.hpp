// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace gas {

enum class ColorSpace {
  gamma_encoded,  // display-referred, as stored in PNG files
  linear,
};

// Planar image, channel-major: plane(c)[y * width + x]. Double precision
// throughout the training path so analytic gradients can be checked against
// finite differences at tight tolerance.
struct ImageBuf {
  int width = 0;
  int height = 0;
  int channels = 0;
  ColorSpace space = ColorSpace::gamma_encoded;
  std::vector<double> data;

  ImageBuf() = default;
  ImageBuf(int w, int h, int c, ColorSpace s = ColorSpace::gamma_encoded)
      : width(w), height(h), channels(c), space(s),
        data(static_cast<size_t>(w) * h * c, 0.0) {}

  double* plane(int c) {
    return data.data() + static_cast<size_t>(c) * width * height;
  }
  const double* plane(int c) const {
    return data.data() + static_cast<size_t>(c) * width * height;
  }
  double& at(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  size_t pixels() const { return static_cast<size_t>(width) * height; }
  bool same_shape(const ImageBuf& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// Elementwise gamma decode/encode: pow(max(v,0), g) resp. pow(max(v,0), 1/g).
ImageBuf to_linear(const ImageBuf& img, double g);
ImageBuf to_gamma(const ImageBuf& img, double g);

// Rec.709 luma of a 3-channel image, computed on the values as stored.
ImageBuf luma(const ImageBuf& img);

ImageBuf crop(const ImageBuf& img, int x0, int y0, int w, int h);
// Scatters grad of a crop back into a full-size gradient image.
void crop_adjoint_add(const ImageBuf& grad_crop, int x0, int y0,
                      ImageBuf& grad_full);

// 2x2 box average; odd sizes replicate the last row/column. Output is
// ceil(w/2) x ceil(h/2).
ImageBuf downsample_half(const ImageBuf& img);
void downsample_half_adjoint_add(const ImageBuf& grad_small,
                                 ImageBuf& grad_full);

// Bilinear resize to (w, h) with pixel-center alignment and edge clamp.
ImageBuf upsample_bilinear(const ImageBuf& img, int w, int h);
void upsample_bilinear_adjoint_add(const ImageBuf& grad_big,
                                   ImageBuf& grad_small);

// Source taps and weight for one bilinear output coordinate; shared by the
// training path and the fused runtime so their geometry cannot drift.
struct LerpCoord {
  int i0, i1;
  double t;
};
LerpCoord bilinear_coord(int dst, int dst_n, int src_n);

// Separable 1-D convolution with replicate borders. kernel has 2*radius+1
// taps, centered. dst must match src shape.
void conv1d_h(const ImageBuf& src, const double* kernel, int radius,
              ImageBuf& dst);
void conv1d_v(const ImageBuf& src, const double* kernel, int radius,
              ImageBuf& dst);
// Adjoints accumulate into grad_src; replicate-border contributions fold
// onto the edge pixels.
void conv1d_h_adjoint_add(const ImageBuf& grad_dst, const double* kernel,
                          int radius, ImageBuf& grad_src);
void conv1d_v_adjoint_add(const ImageBuf& grad_dst, const double* kernel,
                          int radius, ImageBuf& grad_src);
// d(loss)/d(kernel tap): grad_k[j] += sum over pixels of
// grad_dst * src[clamped tap position]. Accumulates 2*radius+1 values.
void conv1d_h_weight_grad_add(const ImageBuf& grad_dst, const ImageBuf& src,
                              int radius, double* grad_k);
void conv1d_v_weight_grad_add(const ImageBuf& grad_dst, const ImageBuf& src,
                              int radius, double* grad_k);

}  // namespace gas
