// Copyright 2026  The upcall-mmdl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef UPCALL_IMAGE_H_
#define UPCALL_IMAGE_H_

#include <filesystem>

#include "upcall/common.h"

namespace upcall {

inline constexpr int kImageSize = 100;
inline constexpr int kImagePixels = kImageSize * kImageSize;

// 100x100 time-frequency image with pixels in [0,1]. Row 0 is the top of the
// image (highest frequency); columns run forward in time.
class Image {
 public:
  Image() : pixels_(Matrix::Zero(kImageSize, kImageSize)) {}
  explicit Image(Matrix pixels);

  const Matrix& pixels() const { return pixels_; }
  double operator()(int r, int c) const { return pixels_(r, c); }
  double& operator()(int r, int c) { return pixels_(r, c); }
  const double* data() const { return pixels_.data(); }

  bool operator==(const Image& o) const { return pixels_ == o.pixels_; }

 private:
  Matrix pixels_;
};

// Bilinear interpolation on a corner-aligned grid: output corners coincide
// with input corners.
Matrix resize_bilinear(const Matrix& in, int out_h, int out_w);

// Per-matrix min-max scaling to [0,1]. A constant matrix maps to all zeros.
Matrix normalize_minmax(const Matrix& in);

// Resize to 100x100 then min-max normalize.
Image to_image(const Matrix& tf);

// 8-bit binary PGM (P5) plus a raw little-endian float64 sidecar that
// preserves the exact pixel values.
void write_pgm(const std::filesystem::path& path, const Image& img);
void write_raw_image(const std::filesystem::path& path, const Image& img);
Image read_raw_image(const std::filesystem::path& path);

}  // namespace upcall

#endif  // UPCALL_IMAGE_H_
