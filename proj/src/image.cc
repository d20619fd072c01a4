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

#include "upcall/image.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace upcall {

Image::Image(Matrix pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rows() != kImageSize || pixels_.cols() != kImageSize)
    throw ValidationError("image must be 100x100, got " + std::to_string(pixels_.rows()) + "x" +
                          std::to_string(pixels_.cols()));
}

Matrix resize_bilinear(const Matrix& in, int out_h, int out_w) {
  if (in.rows() < 2 || in.cols() < 2) throw ValidationError("resize: input must be at least 2x2");
  if (out_h < 2 || out_w < 2) throw ValidationError("resize: output must be at least 2x2");
  const Eigen::Index h = in.rows(), w = in.cols();
  Matrix out(out_h, out_w);
  for (int i = 0; i < out_h; ++i) {
    double y = static_cast<double>(i) * static_cast<double>(h - 1) / (out_h - 1);
    Eigen::Index y0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(y), h - 2);
    double fy = y - static_cast<double>(y0);
    for (int j = 0; j < out_w; ++j) {
      double x = static_cast<double>(j) * static_cast<double>(w - 1) / (out_w - 1);
      Eigen::Index x0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(x), w - 2);
      double fx = x - static_cast<double>(x0);
      double top = in(y0, x0) + fx * (in(y0, x0 + 1) - in(y0, x0));
      double bot = in(y0 + 1, x0) + fx * (in(y0 + 1, x0 + 1) - in(y0 + 1, x0));
      out(i, j) = top + fy * (bot - top);
    }
  }
  return out;
}

Matrix normalize_minmax(const Matrix& in) {
  const double lo = in.minCoeff();
  const double hi = in.maxCoeff();
  if (!(hi > lo)) return Matrix::Zero(in.rows(), in.cols());
  Matrix out = (in.array() - lo) / (hi - lo);
  return out.cwiseMax(0.0).cwiseMin(1.0);
}

Image to_image(const Matrix& tf) {
  return Image(normalize_minmax(resize_bilinear(tf, kImageSize, kImageSize)));
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeFailure("cannot write " + path.string());
  f << "P5\n" << kImageSize << ' ' << kImageSize << "\n255\n";
  for (int r = 0; r < kImageSize; ++r)
    for (int c = 0; c < kImageSize; ++c)
      f.put(static_cast<char>(static_cast<unsigned char>(std::lround(img(r, c) * 255.0))));
}

void write_raw_image(const std::filesystem::path& path, const Image& img) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeFailure("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(img.data()), sizeof(double) * kImagePixels);
}

Image read_raw_image(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot open " + path.string());
  Matrix m(kImageSize, kImageSize);
  f.read(reinterpret_cast<char*>(m.data()), sizeof(double) * kImagePixels);
  if (f.gcount() != static_cast<std::streamsize>(sizeof(double) * kImagePixels))
    throw RuntimeFailure(path.string() + ": truncated raw image");
  return Image(std::move(m));
}

}  // namespace upcall
