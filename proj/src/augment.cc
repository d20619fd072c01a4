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

#include "upcall/augment.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace upcall {

void AugmentConfig::validate() const {
  if (!(scale_range.first > 0) || !(scale_range.first <= scale_range.second))
    throw ValidationError("augment: scale range must satisfy 0 < low <= high");
  if (!(noise_sigma >= 0)) throw ValidationError("augment: noise_sigma must be >= 0");
  if (!(max_rotation_deg >= 0) || !(max_shear >= 0))
    throw ValidationError("augment: rotation and shear bounds must be >= 0");
  if (copies_per_image < 0) throw ValidationError("augment: copies_per_image must be >= 0");
}

AffineParams sample_affine(const AugmentConfig& cfg, Rng& rng) {
  AffineParams p;
  p.rotation_deg = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg);
  p.scale = rng.uniform(cfg.scale_range.first, cfg.scale_range.second);
  p.reflect = cfg.allow_reflection && rng.bernoulli(0.5);
  p.shear = rng.uniform(-cfg.max_shear, cfg.max_shear);
  return p;
}

Image apply_affine(const Image& img, const AffineParams& p) {
  // Forward map about the center: q = c + R * Sh * S * F * (p - c). We invert
  // it and pull each output pixel from the source.
  const double th = p.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  const double f = p.reflect ? -1.0 : 1.0;
  // M = R * [[1, shear], [0, 1]] * scale * diag(f, 1), acting on (x, y).
  const double m00 = c * p.scale * f;
  const double m01 = (c * p.shear - s) * p.scale;
  const double m10 = s * p.scale * f;
  const double m11 = (s * p.shear + c) * p.scale;
  const double det = m00 * m11 - m01 * m10;
  if (det == 0) throw ValidationError("augment: singular affine transform");
  const double i00 = m11 / det, i01 = -m01 / det, i10 = -m10 / det, i11 = m00 / det;

  const double center = (kImageSize - 1) / 2.0;
  const Matrix& src = img.pixels();
  auto at = [&](int r, int col) -> double {
    if (r < 0 || r >= kImageSize || col < 0 || col >= kImageSize) return 0.0;
    return src(r, col);
  };
  Matrix out(kImageSize, kImageSize);
  for (int r = 0; r < kImageSize; ++r) {
    for (int col = 0; col < kImageSize; ++col) {
      const double dx = col - center, dy = r - center;
      const double sx = center + (i00 * dx + i01 * dy);
      const double sy = center + (i10 * dx + i11 * dy);
      const double fx0 = std::floor(sx), fy0 = std::floor(sy);
      const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
      const double ax = sx - fx0, ay = sy - fy0;
      double v = at(y0, x0) * (1 - ax) * (1 - ay);
      if (ax != 0) v += at(y0, x0 + 1) * ax * (1 - ay);
      if (ay != 0) v += at(y0 + 1, x0) * (1 - ax) * ay;
      if (ax != 0 && ay != 0) v += at(y0 + 1, x0 + 1) * ax * ay;
      out(r, col) = v;
    }
  }
  return Image(std::move(out));
}

Image augment_image(const Image& img, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  Image warped = apply_affine(img, sample_affine(cfg, rng));
  if (cfg.noise_sigma == 0) return warped;
  Matrix m = warped.pixels();
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = std::clamp(m.data()[i] + rng.normal(0.0, cfg.noise_sigma), 0.0, 1.0);
  return Image(std::move(m));
}

std::vector<Image> augment_set(const std::vector<Image>& images, const AugmentConfig& cfg, Rng& rng,
                               std::vector<size_t>* source) {
  cfg.validate();
  std::vector<Image> out(images.begin(), images.end());
  out.reserve(images.size() * static_cast<size_t>(cfg.copies_per_image + 1));
  if (source) {
    source->resize(images.size());
    for (size_t i = 0; i < images.size(); ++i) (*source)[i] = i;
  }
  for (size_t i = 0; i < images.size(); ++i) {
    for (int c = 0; c < cfg.copies_per_image; ++c) {
      out.push_back(augment_image(images[i], cfg, rng));
      if (source) source->push_back(i);
    }
  }
  return out;
}

}  // namespace upcall
