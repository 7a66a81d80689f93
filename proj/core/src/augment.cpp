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

#include "groundplane/augment.hpp"

#include "groundplane/error.hpp"
#include "groundplane/random.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace groundplane {

namespace {

constexpr int kMinCrop = 16;

struct CropRect {
    int left = 0;
    int top = 0;
    int width = 0;
    int height = 0;
};

// Inclusive-exclusive prefix sums of invalid pixels for O(1) rectangle queries.
class InvalidCounter {
  public:
    explicit InvalidCounter(const Grid<std::uint8_t> &valid)
        : sums_(valid.width() + 1, valid.height() + 1, 0) {
        for (int r = 0; r < valid.height(); ++r) {
            for (int c = 0; c < valid.width(); ++c) {
                sums_(c + 1, r + 1) = sums_(c, r + 1) + sums_(c + 1, r) - sums_(c, r) + (valid(c, r) ? 0 : 1);
            }
        }
    }

    long count(int c0, int r0, int c1, int r1) const { // [c0, c1) x [r0, r1)
        return sums_(c1, r1) - sums_(c0, r1) - sums_(c1, r0) + sums_(c0, r0);
    }

  private:
    Grid<long> sums_;
};

CropRect centered_crop(const Grid<std::uint8_t> &valid, const CameraIntrinsics &k) {
    const int w = valid.width();
    const int h = valid.height();
    const int ic = static_cast<int>(std::lround(k.cx));
    const int ir = static_cast<int>(std::lround(k.cy));
    const InvalidCounter invalid(valid);

    const int max_ha = std::min(ic, w - 1 - ic);
    const int max_hb = std::min(ir, h - 1 - ir);
    CropRect best;
    long best_area = 0;
    for (int hb = 0; hb <= max_hb; ++hb) {
        const int r0 = ir - hb;
        const int r1 = ir + hb + 1;
        if (invalid.count(ic, r0, ic + 1, r1) > 0) {
            break; // taller rectangles contain this column too
        }
        // Nested rectangles: the invalid count is monotone in the half width.
        int lo = 0;
        int hi = max_ha;
        while (lo < hi) {
            const int mid = (lo + hi + 1) / 2;
            if (invalid.count(ic - mid, r0, ic + mid + 1, r1) == 0) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        const int cw = 2 * lo + 1;
        const int ch = 2 * hb + 1;
        const long area = static_cast<long>(cw) * ch;
        if (cw >= kMinCrop && ch >= kMinCrop && area > best_area) {
            best_area = area;
            best = {ic - lo, r0, cw, ch};
        }
    }
    if (best_area == 0) {
        throw Error(ErrorCode::CropTooSmall, "valid centered crop is smaller than 16x16");
    }
    return best;
}

Sample crop(const Sample &s, const CropRect &rect) {
    Sample out;
    out.intrinsics = s.intrinsics;
    out.intrinsics.cx -= rect.left;
    out.intrinsics.cy -= rect.top;
    out.intrinsics.width = rect.width;
    out.intrinsics.height = rect.height;
    out.gt_normal = s.gt_normal;
    out.gt_height = s.gt_height;
    out.depth = DepthMap(rect.width, rect.height);
    out.normals = NormalMap(rect.width, rect.height);
    out.mask = GroundMask(rect.width, rect.height);
    for (int r = 0; r < rect.height; ++r) {
        for (int c = 0; c < rect.width; ++c) {
            const std::size_t src = s.depth.depth.index(c + rect.left, r + rect.top);
            const std::size_t dst = out.depth.depth.index(c, r);
            out.depth.depth[dst] = s.depth.depth[src];
            out.depth.valid[dst] = s.depth.valid[src];
            out.normals.normal[dst] = s.normals.normal[src];
            out.normals.valid[dst] = s.normals.valid[src];
            out.mask.ground[dst] = s.mask.ground[src];
        }
    }
    return out;
}

} // namespace

void AugmentLimits::validate() const {
    if (!(max_roll_deg >= 0.0) || !(max_pitch_units >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "augmentation limits must be non-negative");
    }
}

ImageWarp ImageWarp::roll(double angle, const CameraIntrinsics &k) {
    return ImageWarp(k.matrix() * rotation_z(angle) * k.inverse());
}

ImageWarp ImageWarp::shift_up(double pixels) {
    Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
    T(1, 2) = -pixels;
    return ImageWarp(T);
}

PixelPoint ImageWarp::source_of(const PixelPoint &out) const {
    const Eigen::Vector3d src = forward_.inverse() * out.homogeneous();
    return src.hnormalized();
}

Sample resample(const Sample &sample, const ImageWarp &warp, const Eigen::Matrix3d &normal_rotation) {
    sample.validate();
    const int w = sample.intrinsics.width;
    const int h = sample.intrinsics.height;
    const Eigen::Matrix3d inverse = warp.matrix().inverse();

    Sample out;
    out.intrinsics = sample.intrinsics;
    out.gt_normal = sample.gt_normal;
    out.gt_height = sample.gt_height;
    out.depth = DepthMap(w, h);
    out.normals = NormalMap(w, h);
    out.mask = GroundMask(w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const Eigen::Vector2d src = (inverse * Eigen::Vector3d(c, r, 1.0)).hnormalized();
            const long sc = std::lround(src.x());
            const long sr = std::lround(src.y());
            if (sc < 0 || sc >= w || sr < 0 || sr >= h) {
                continue;
            }
            const std::size_t si = sample.depth.depth.index(static_cast<int>(sc), static_cast<int>(sr));
            const std::size_t di = out.depth.depth.index(c, r);
            out.depth.depth[di] = sample.depth.depth[si];
            out.depth.valid[di] = sample.depth.valid[si];
            out.normals.valid[di] = sample.normals.valid[si];
            out.normals.normal[di] =
                sample.normals.valid[si] ? Eigen::Vector3d(normal_rotation * sample.normals.normal[si])
                                         : sample.normals.normal[si];
            out.mask.ground[di] = sample.mask.ground[si];
        }
    }
    return out;
}

UnitNormal augmented_normal(const UnitNormal &n, double roll, double pitch) {
    return UnitNormal(rotation_x(pitch) * rotation_z(roll) * n.vec());
}

AugmentResult augment_with(const Sample &sample, double roll, int shift_px) {
    sample.validate();
    const CameraIntrinsics &k = sample.intrinsics;
    AugmentResult result;
    result.applied = {roll, std::atan(shift_px / k.fy)};
    result.shift_px = shift_px;
    if (roll == 0.0 && shift_px == 0) {
        result.sample = sample;
        return result;
    }

    const ImageWarp warp = ImageWarp::roll(roll, k).then(ImageWarp::shift_up(shift_px));
    Sample warped = resample(sample, warp, rotation_z(roll));

    // Out-of-bounds pixels are exactly those never written by resample.
    Grid<std::uint8_t> inside(k.width, k.height, 0);
    const Eigen::Matrix3d inverse = warp.matrix().inverse();
    bool any_outside = false;
    for (int r = 0; r < k.height; ++r) {
        for (int c = 0; c < k.width; ++c) {
            const Eigen::Vector2d src = (inverse * Eigen::Vector3d(c, r, 1.0)).hnormalized();
            const long sc = std::lround(src.x());
            const long sr = std::lround(src.y());
            const bool ok = sc >= 0 && sc < k.width && sr >= 0 && sr < k.height;
            inside(c, r) = ok ? 1 : 0;
            any_outside = any_outside || !ok;
        }
    }
    result.sample = any_outside ? crop(warped, centered_crop(inside, k)) : std::move(warped);
    if (sample.gt_normal) {
        result.sample.gt_normal = augmented_normal(*sample.gt_normal, result.applied.roll, result.applied.pitch);
    }
    return result;
}

AugmentResult augment(const Sample &sample, const AugmentLimits &limits) {
    limits.validate();
    Rng rng(derive_seed(limits.seed, 21));
    const double roll = deg2rad(rng.uniform(-limits.max_roll_deg, limits.max_roll_deg));
    const double limit_px = limits.max_pitch_units * sample.intrinsics.height;
    const double shift = rng.uniform(-limit_px, limit_px);
    // Whole pixels keep nearest-neighbor resampling exact; never round past the limit.
    double snapped = std::round(shift);
    if (std::abs(snapped) > limit_px) {
        snapped = std::trunc(shift);
    }
    return augment_with(sample, roll, static_cast<int>(snapped));
}

} // namespace groundplane
