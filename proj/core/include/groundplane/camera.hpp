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

#include <Eigen/Core>

namespace groundplane {

using PixelPoint = Eigen::Vector2d;  // (u rightward, v downward), pixels
using CameraPoint = Eigen::Vector3d; // (x right, y down, z forward), meters

struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    // Throws InvalidArgument unless fx, fy > 0, the image is non-empty and the
    // principal point lies inside it.
    void validate() const;

    Eigen::Matrix3d matrix() const;
    Eigen::Matrix3d inverse() const;

    bool operator==(const CameraIntrinsics &) const = default;
};

// Plane normal with unit length and the canonical orientation ny <= 0, i.e.
// pointing "up" in the y-down camera frame.
class UnitNormal {
  public:
    UnitNormal() : n_(0.0, -1.0, 0.0) {}

    // Normalizes and flips to ny <= 0. Throws DegenerateNormal on a zero or
    // non-finite input.
    explicit UnitNormal(const Eigen::Vector3d &v);
    UnitNormal(double x, double y, double z) : UnitNormal(Eigen::Vector3d(x, y, z)) {}

    const Eigen::Vector3d &vec() const { return n_; }
    double x() const { return n_.x(); }
    double y() const { return n_.y(); }
    double z() const { return n_.z(); }

    bool operator==(const UnitNormal &) const = default;

  private:
    Eigen::Vector3d n_;
};

// Camera roll (about the optical axis) and pitch (about the camera x axis), radians.
struct RollPitch {
    double roll = 0.0;
    double pitch = 0.0;
};

// Horizon line in the image: theta is its angle to the horizontal image axis,
// rho the signed distance from the principal point, positive when the line
// passes above it (smaller v).
struct HorizonLine {
    double theta = 0.0;
    double rho = 0.0;

    // Point on the line at arc-length t from the foot of the perpendicular
    // dropped from the principal point.
    PixelPoint point_at(double t, const CameraIntrinsics &k) const;
};

struct HorizonError {
    double theta_deg = 0.0;
    double rho_units = 0.0; // fraction of image height
};

CameraPoint unproject(const PixelPoint &p, double depth, const CameraIntrinsics &k);
PixelPoint project(const CameraPoint &q, const CameraIntrinsics &k);

// Unnormalized viewing ray (z = 1) through pixel p.
Eigen::Vector3d pixel_ray(const PixelPoint &p, const CameraIntrinsics &k);

Eigen::Matrix3d rotation_x(double angle);
Eigen::Matrix3d rotation_z(double angle);

// n = Rz(roll) * Rx(pitch) * (0, -1, 0).
UnitNormal rollpitch_to_normal(const RollPitch &rp);
RollPitch normal_to_rollpitch(const UnitNormal &n);

HorizonLine normal_to_horizon(const UnitNormal &n, const CameraIntrinsics &k);
HorizonError horizon_errors(const HorizonLine &est, const HorizonLine &gt, const CameraIntrinsics &k);

constexpr double deg2rad(double deg) { return deg * 0.017453292519943295; }
constexpr double rad2deg(double rad) { return rad * 57.29577951308232; }

} // namespace groundplane
