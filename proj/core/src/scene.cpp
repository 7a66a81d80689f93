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

#include "groundplane/scene.hpp"

#include "groundplane/error.hpp"
#include "groundplane/random.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

namespace groundplane {

namespace {

struct Hit {
    double t;
    Eigen::Vector3d normal;
};

// Slab test in the box's local frame. Rays starting inside a box are ignored.
std::optional<Hit> intersect_box(const Box &box, const GroundFrame &frame, const Eigen::Vector3d &dir) {
    const Eigen::Vector3d base = frame.origin + box.right * frame.right + box.forward * frame.forward;
    const Eigen::Vector3d axes[3] = {frame.right, frame.up, frame.forward};
    const double lo[3] = {-0.5 * box.width, 0.0, -0.5 * box.depth};
    const double hi[3] = {0.5 * box.width, box.height, 0.5 * box.depth};

    double t_enter = -std::numeric_limits<double>::infinity();
    double t_exit = std::numeric_limits<double>::infinity();
    int enter_axis = -1;
    double enter_sign = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double o = -base.dot(axes[a]);
        const double d = dir.dot(axes[a]);
        if (d == 0.0) {
            if (o < lo[a] || o > hi[a]) {
                return std::nullopt;
            }
            continue;
        }
        double t0 = (lo[a] - o) / d;
        double t1 = (hi[a] - o) / d;
        // Entering through the low face means the outward normal is -axis.
        double sign = -1.0;
        if (t0 > t1) {
            std::swap(t0, t1);
            sign = 1.0;
        }
        if (t0 > t_enter) {
            t_enter = t0;
            enter_axis = a;
            enter_sign = sign;
        }
        t_exit = std::min(t_exit, t1);
    }
    if (enter_axis < 0 || t_enter > t_exit || t_enter <= 0.0) {
        return std::nullopt;
    }
    return Hit{t_enter, enter_sign * axes[enter_axis]};
}

} // namespace

void SceneSpec::validate() const {
    intrinsics.validate();
    std::ostringstream msg;
    if (!(camera_height > 0.0)) {
        msg << "camera height must be positive (got " << camera_height << ")";
    } else if (!(background_depth > 0.0) || !std::isfinite(background_depth)) {
        msg << "background depth must be positive (got " << background_depth << ")";
    } else {
        for (const Box &b : boxes) {
            if (!(b.width > 0.0 && b.depth > 0.0 && b.height > 0.0)) {
                msg << "box dimensions must be positive";
                break;
            }
        }
    }
    if (!msg.str().empty()) {
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

GroundFrame ground_frame(const UnitNormal &normal, double camera_height) {
    GroundFrame f;
    f.up = normal.vec();
    Eigen::Vector3d fwd = Eigen::Vector3d::UnitZ() - normal.z() * f.up;
    if (fwd.norm() < 1e-9) {
        fwd = Eigen::Vector3d::UnitX() - normal.x() * f.up;
    }
    f.forward = fwd.normalized();
    f.right = f.forward.cross(f.up);
    f.origin = -camera_height * f.up;
    return f;
}

Sample render(const SceneSpec &spec) {
    spec.validate();
    const CameraIntrinsics &k = spec.intrinsics;
    const GroundFrame frame = ground_frame(spec.ground_normal, spec.camera_height);
    const Eigen::Vector3d &n = spec.ground_normal.vec();

    Sample s;
    s.intrinsics = k;
    s.depth = DepthMap(k.width, k.height);
    s.normals = NormalMap(k.width, k.height);
    s.mask = GroundMask(k.width, k.height);
    s.gt_normal = spec.ground_normal;
    s.gt_height = spec.camera_height;

    std::size_t ground_pixels = 0;
    for (int row = 0; row < k.height; ++row) {
        for (int col = 0; col < k.width; ++col) {
            const Eigen::Vector3d dir = pixel_ray(PixelPoint(col, row), k);
            double best_t = std::numeric_limits<double>::infinity();
            Eigen::Vector3d best_normal = Eigen::Vector3d::Zero();
            bool ground = false;

            const double denom = n.dot(dir);
            if (denom < 0.0) {
                best_t = -spec.camera_height / denom;
                best_normal = n;
                ground = true;
            }
            for (const Box &box : spec.boxes) {
                if (auto hit = intersect_box(box, frame, dir); hit && hit->t < best_t) {
                    best_t = hit->t;
                    best_normal = hit->normal;
                    ground = false;
                }
            }

            const std::size_t i = s.depth.depth.index(col, row);
            s.depth.valid[i] = 1;
            if (std::isfinite(best_t)) {
                // The ray has unit z, so the ray parameter is the depth.
                s.depth.depth[i] = best_t;
                s.normals.normal[i] = best_normal;
                s.normals.valid[i] = 1;
                s.mask.ground[i] = ground ? 1 : 0;
                ground_pixels += ground ? 1 : 0;
            } else {
                s.depth.depth[i] = spec.background_depth;
            }
        }
    }
    if (ground_pixels == 0) {
        throw Error(ErrorCode::EmptyGround, "no pixel sees the ground plane");
    }
    return s;
}

void NoiseSpec::validate() const {
    if (!(depth_sigma_rel >= 0.0) || !(normal_sigma >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "noise sigmas must be non-negative");
    }
    if (!(outlier_frac >= 0.0 && outlier_frac <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "outlier_frac must lie in [0, 1]");
    }
    if (!(outlier_height >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "outlier_height must be non-negative");
    }
}

Sample corrupt(const Sample &sample, const NoiseSpec &noise) {
    noise.validate();
    sample.validate();
    Sample out = sample;

    if (noise.outlier_frac > 0.0) {
        if (!sample.gt_height) {
            throw Error(ErrorCode::InvalidArgument, "outliers need the sample's gt_height");
        }
        const double h = *sample.gt_height;
        if (!(noise.outlier_height < h)) {
            throw Error(ErrorCode::InvalidArgument, "outlier_height must be below the camera height");
        }
        std::vector<std::size_t> masked;
        for (std::size_t i = 0; i < out.mask.size(); ++i) {
            if (out.mask.ground[i] && out.depth.valid[i]) {
                masked.push_back(i);
            }
        }
        Rng rng(derive_seed(noise.seed, 3));
        rng.shuffle(masked.begin(), masked.end());
        const auto count = static_cast<std::size_t>(std::llround(noise.outlier_frac * masked.size()));
        // Scaling a depth by (h - dh) / h moves a ground point along its ray onto
        // the plane dh meters higher.
        const double scale = (h - noise.outlier_height) / h;
        for (std::size_t j = 0; j < count; ++j) {
            out.depth.depth[masked[j]] *= scale;
        }
    }

    if (noise.depth_sigma_rel > 0.0) {
        Rng rng(derive_seed(noise.seed, 1));
        for (std::size_t i = 0; i < out.depth.size(); ++i) {
            if (!out.depth.valid[i]) {
                continue;
            }
            const double z = out.depth.depth[i] * (1.0 + noise.depth_sigma_rel * rng.normal());
            if (z > 0.0 && std::isfinite(z)) {
                out.depth.depth[i] = z;
            } else {
                out.depth.valid[i] = 0;
                out.depth.depth[i] = 0.0;
            }
        }
    }

    if (noise.normal_sigma > 0.0) {
        Rng rng(derive_seed(noise.seed, 2));
        for (std::size_t i = 0; i < out.normals.size(); ++i) {
            if (!out.normals.valid[i]) {
                continue;
            }
            Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
            while (axis.norm() < 1e-12) {
                axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
            }
            const double angle = std::abs(noise.normal_sigma * rng.normal());
            const Eigen::Vector3d rotated = Eigen::AngleAxisd(angle, axis.normalized()) * out.normals.normal[i];
            out.normals.normal[i] = rotated.normalized();
        }
    }
    return out;
}

SceneSpec generate_scene(const SceneGeneratorConfig &config, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 11));
    SceneSpec spec;
    spec.intrinsics = config.intrinsics;
    spec.seed = seed;
    spec.background_depth = config.background_depth;
    const double roll = deg2rad(rng.uniform(-config.max_roll_deg, config.max_roll_deg));
    const double pitch = deg2rad(rng.uniform(-config.max_pitch_deg, config.max_pitch_deg));
    spec.ground_normal = rollpitch_to_normal({roll, pitch});
    spec.camera_height = rng.uniform(config.min_height, config.max_height);
    const auto n_boxes = config.max_boxes > 0 ? rng.index(static_cast<std::uint64_t>(config.max_boxes) + 1) : 0;
    for (std::uint64_t b = 0; b < n_boxes; ++b) {
        Box box;
        box.right = rng.uniform(-6.0, 6.0);
        box.forward = rng.uniform(8.0, 25.0);
        box.width = rng.uniform(1.6, 2.0);
        box.depth = rng.uniform(3.5, 4.5);
        box.height = rng.uniform(1.4, 1.6);
        spec.boxes.push_back(box);
    }
    return spec;
}

} // namespace groundplane
