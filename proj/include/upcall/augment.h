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

#ifndef UPCALL_AUGMENT_H_
#define UPCALL_AUGMENT_H_

#include <utility>
#include <vector>

#include "upcall/image.h"

namespace upcall {

struct AugmentConfig {
  double max_rotation_deg = 10.0;
  std::pair<double, double> scale_range{0.9, 1.1};
  bool allow_reflection = true;
  double max_shear = 0.1;
  double noise_sigma = 0.02;
  int copies_per_image = 1;

  void validate() const;
};

// One concrete draw of the affine part of an augmentation.
struct AffineParams {
  double rotation_deg = 0.0;
  double scale = 1.0;
  bool reflect = false;  // horizontal (time-axis) mirror
  double shear = 0.0;
};

AffineParams sample_affine(const AugmentConfig& cfg, Rng& rng);

// Warps the image about its center with bilinear sampling; samples falling
// outside the source read as zero.
Image apply_affine(const Image& img, const AffineParams& p);

// Affine warp, then additive Gaussian pixel noise, then clamp to [0,1].
Image augment_image(const Image& img, const AugmentConfig& cfg, Rng& rng);

// Originals followed by copies_per_image augmented variants of each, so m
// inputs give m * (copies_per_image + 1) outputs. `source` receives, for each
// output, the index of the input it came from.
std::vector<Image> augment_set(const std::vector<Image>& images, const AugmentConfig& cfg, Rng& rng,
                               std::vector<size_t>* source = nullptr);

}  // namespace upcall

#endif  // UPCALL_AUGMENT_H_
