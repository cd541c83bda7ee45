// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "gas/image.hpp"

namespace gas {

// Reads an 8- or 16-bit RGB/RGBA PNG to a 3-channel [0, 1] gamma-encoded
// image (alpha, if present, is dropped). Other layouts are a parse error.
ImageBuf load_png(const std::string& path);

// Writes a 1- or 3-channel image as 8-bit PNG; values are clamped to [0, 1]
// and rounded.
void save_png(const std::string& path, const ImageBuf& img);

}  // namespace gas
