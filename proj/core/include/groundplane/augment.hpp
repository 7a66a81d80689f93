/*
Copyright 2026 The groundplane Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include "groundplane/camera.hpp"
#include "groundplane/maps.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace groundplane {

struct AugmentLimits {
    double max_roll_deg = 0.0;
    double max_pitch_units = 0.0; // vertical shift limit as a fraction of image height
    std::uint64_t seed = 0;

    void validate() const;
};

// Pixel-space warp mapping source pixels to output pixels, as a 3x3
// homography. Roll about the principal point is the camera rotation
// homography K Rz K^-1; the vertical shift moves content up by `shift` px.
class ImageWarp {
  public:
    ImageWarp() : forward_(Eigen::Matrix3d::Identity()) {}
    explicit ImageWarp(const Eigen::Matrix3d &forward) : forward_(forward) {}

    static ImageWarp roll(double angle, const CameraIntrinsics &k);
    static ImageWarp shift_up(double pixels);

    // Applies `this` first, then `next`.
    ImageWarp then(const ImageWarp &next) const { return ImageWarp(next.forward_ * forward_); }

    PixelPoint source_of(const PixelPoint &out) const;
    const Eigen::Matrix3d &matrix() const { return forward_; }

  private:
    Eigen::Matrix3d forward_;
};

// Nearest-neighbor resampling onto a canvas of the same size. Output pixels
// whose source falls outside the image are invalid with mask 0. Per-pixel
// normals are rotated by `normal_rotation`.
Sample resample(const Sample &sample, const ImageWarp &warp, const Eigen::Matrix3d &normal_rotation);

struct AugmentResult {
    Sample sample;
    RollPitch applied; // roll and pitch increments, radians
    double shift_px = 0.0;
};

// Rolls the image by `roll` radians about the principal point, then moves it up
// by `shift_px` whole pixels, and crops to the largest rectangle centered on
// the principal point that has no out-of-bounds pixels. Throws CropTooSmall
// when that rectangle is under 16x16.
AugmentResult augment_with(const Sample &sample, double roll, int shift_px);

// Draws roll ~ U(-max_roll, max_roll) and shift ~ U(-max_units, max_units) *
// height, snaps the shift to whole pixels without exceeding the limit, and
// applies augment_with.
AugmentResult augment(const Sample &sample, const AugmentLimits &limits);

// Ground-truth update for a roll and an upward shift: Rx(atan(shift / fy)) * Rz(roll) * n.
UnitNormal augmented_normal(const UnitNormal &n, double roll, double pitch);

} // namespace groundplane
