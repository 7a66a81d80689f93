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

#include "groundplane/camera.hpp"

#include "groundplane/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace groundplane {

void CameraIntrinsics::validate() const {
    std::ostringstream msg;
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
        msg << "focal lengths must be positive (fx=" << fx << ", fy=" << fy << ")";
    } else if (width < 1 || height < 1) {
        msg << "image size must be at least 1x1 (got " << width << "x" << height << ")";
    } else if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
        msg << "principal point (" << cx << ", " << cy << ") outside " << width << "x" << height
            << " image";
    } else {
        return;
    }
    throw Error(ErrorCode::InvalidArgument, msg.str());
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
    Eigen::Matrix3d K;
    K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return K;
}

Eigen::Matrix3d CameraIntrinsics::inverse() const {
    Eigen::Matrix3d Kinv;
    Kinv << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
    return Kinv;
}

UnitNormal::UnitNormal(const Eigen::Vector3d &v) {
    const double len = v.norm();
    if (!std::isfinite(len) || len == 0.0) {
        throw Error(ErrorCode::DegenerateNormal, "cannot normalize a zero or non-finite vector");
    }
    n_ = v / len;
    if (n_.y() > 0.0) {
        n_ = -n_;
    }
}

PixelPoint HorizonLine::point_at(double t, const CameraIntrinsics &k) const {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    // (s, -c) is the unit perpendicular pointing up in the image.
    return PixelPoint(k.cx + rho * s + t * c, k.cy - rho * c + t * s);
}

CameraPoint unproject(const PixelPoint &p, double depth, const CameraIntrinsics &k) {
    if (!(depth > 0.0)) {
        throw Error(ErrorCode::NonPositiveDepth, "unproject requires depth > 0");
    }
    return CameraPoint((p.x() - k.cx) * depth / k.fx, (p.y() - k.cy) * depth / k.fy, depth);
}

PixelPoint project(const CameraPoint &q, const CameraIntrinsics &k) {
    if (!(q.z() > 0.0)) {
        throw Error(ErrorCode::NonPositiveDepth, "project requires z > 0");
    }
    return PixelPoint(k.fx * q.x() / q.z() + k.cx, k.fy * q.y() / q.z() + k.cy);
}

Eigen::Vector3d pixel_ray(const PixelPoint &p, const CameraIntrinsics &k) {
    return Eigen::Vector3d((p.x() - k.cx) / k.fx, (p.y() - k.cy) / k.fy, 1.0);
}

Eigen::Matrix3d rotation_x(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Eigen::Matrix3d R;
    R << 1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c;
    return R;
}

Eigen::Matrix3d rotation_z(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Eigen::Matrix3d R;
    R << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    return R;
}

UnitNormal rollpitch_to_normal(const RollPitch &rp) {
    // Closed form of Rz(roll) * Rx(pitch) * (0, -1, 0).
    const double cr = std::cos(rp.roll);
    const double sr = std::sin(rp.roll);
    const double cp = std::cos(rp.pitch);
    const double sp = std::sin(rp.pitch);
    return UnitNormal(sr * cp, -cr * cp, -sp);
}

RollPitch normal_to_rollpitch(const UnitNormal &n) {
    if (!(n.y() < 0.0)) {
        throw Error(ErrorCode::DegenerateNormal, "normal is parallel to the viewing direction (ny = 0)");
    }
    const double pitch = std::asin(std::clamp(-n.z(), -1.0, 1.0));
    const double roll = std::atan2(n.x(), -n.y());
    return {roll, pitch};
}

HorizonLine normal_to_horizon(const UnitNormal &n, const CameraIntrinsics &k) {
    // Image line A = K^-T n, i.e. a*u + b*v + c = 0.
    const Eigen::Vector3d A = k.inverse().transpose() * n.vec();
    const double a = A.x();
    const double b = A.y();
    const double ab = std::hypot(a, b);
    const double scale = std::abs(n.x()) / k.fx + std::abs(n.y()) / k.fy + std::abs(n.z());
    if (ab <= 1e-12 * scale) {
        throw Error(ErrorCode::HorizonAtInfinity, "normal is parallel to the optical axis");
    }
    if (b == 0.0) {
        throw Error(ErrorCode::DegenerateNormal, "horizon is vertical in the image");
    }
    // a*cx + b*cy + c collapses to n.z; the sign of b decides which side is up.
    const double side = b < 0.0 ? -1.0 : 1.0;
    HorizonLine line;
    line.theta = std::atan(-a / b);
    line.rho = side * n.z() / ab;
    return line;
}

HorizonError horizon_errors(const HorizonLine &est, const HorizonLine &gt, const CameraIntrinsics &k) {
    return {rad2deg(std::abs(est.theta - gt.theta)), std::abs(est.rho - gt.rho) / k.height};
}

} // namespace groundplane
