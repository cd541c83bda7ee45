// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#include "gas/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <vector>

#include "gas/common.hpp"

namespace gas {

ImageBuf load_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) fail(ErrorKind::io, "cannot open png: " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    if (png) png_destroy_read_struct(&png, nullptr, nullptr);
    std::fclose(fp);
    fail(ErrorKind::io, "png reader allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorKind::parse, "cannot decode png: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if ((color != PNG_COLOR_TYPE_RGB && color != PNG_COLOR_TYPE_RGB_ALPHA) ||
      (depth != 8 && depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorKind::parse,
         "unsupported png format (want 8- or 16-bit RGB/RGBA): " + path);
  }
  const int nch = color == PNG_COLOR_TYPE_RGB_ALPHA ? 4 : 3;
  const size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> raw(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = raw.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  ImageBuf out(w, h, 3, ColorSpace::gamma_encoded);
  const size_t n = out.pixels();
  for (int c = 0; c < 3; ++c) {
    double* p = out.plane(c);
    if (depth == 8) {
      for (size_t i = 0; i < n; ++i)
        p[i] = raw[i * nch + c] * (1.0 / 255.0);
    } else {
      // PNG 16-bit samples are big-endian.
      for (size_t i = 0; i < n; ++i) {
        size_t o = (i * nch + c) * 2;
        p[i] = ((raw[o] << 8) | raw[o + 1]) * (1.0 / 65535.0);
      }
    }
  }
  return out;
}

void save_png(const std::string& path, const ImageBuf& img) {
  if (img.channels != 1 && img.channels != 3)
    fail(ErrorKind::shape, "save_png wants 1 or 3 channels");
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  im.width = static_cast<png_uint_32>(img.width);
  im.height = static_cast<png_uint_32>(img.height);
  im.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const size_t n = img.pixels();
  std::vector<unsigned char> buf(n * img.channels);
  for (int c = 0; c < img.channels; ++c) {
    const double* p = img.plane(c);
    for (size_t i = 0; i < n; ++i) {
      double v = clamp01(p[i]) * 255.0;
      buf[i * img.channels + c] = static_cast<unsigned char>(v + 0.5);
    }
  }
  if (!png_image_write_to_file(&im, path.c_str(), 0, buf.data(), 0, nullptr))
    fail(ErrorKind::io, "cannot write png: " + path + ": " + im.message);
}

}  // namespace gas
