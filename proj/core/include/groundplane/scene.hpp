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
#include <vector>

namespace groundplane {

// Cuboid resting on the ground, axis-aligned with the ground frame. The base
// center sits `right` meters to the right of and `forward` meters ahead of the
// camera's foot point; extents are meters along right/forward/up.
struct Box {
    double right = 0.0;
    double forward = 8.0;
    double width = 2.0;
    double depth = 2.0;
    double height = 1.5;
};

struct SceneSpec {
    CameraIntrinsics intrinsics;
    UnitNormal ground_normal;
    double camera_height = 1.5;
    std::vector<Box> boxes;
    double background_depth = 100.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Orthonormal frame on the ground plane. `up` is the plane normal, `origin` the
// foot of the perpendicular from the camera center.
struct GroundFrame {
    Eigen::Vector3d right;
    Eigen::Vector3d up;
    Eigen::Vector3d forward;
    Eigen::Vector3d origin;
};

GroundFrame ground_frame(const UnitNormal &normal, double camera_height);

// Ray casts every pixel center against the ground plane and the boxes. Throws
// EmptyGround when no pixel sees the ground.
Sample render(const SceneSpec &spec);

struct NoiseSpec {
    double depth_sigma_rel = 0.0; // relative Gaussian depth noise
    double normal_sigma = 0.0;    // radians
    double outlier_frac = 0.0;    // fraction of masked pixels lifted off the ground
    double outlier_height = 0.5;  // meters above the ground plane
    std::uint64_t seed = 0;

    void validate() const;
};

// Applies multiplicative depth noise, random-axis normal jitter and lifted
// outliers. The mask is untouched. Outliers need the sample's gt_height and
// are placed where each pixel's ray meets the plane raised by outlier_height.
Sample corrupt(const Sample &sample, const NoiseSpec &noise);

// Random scene family used by the benchmark and the CLI: a car-mounted camera
// with a small attitude spread and a few car-sized boxes.
struct SceneGeneratorConfig {
    CameraIntrinsics intrinsics{180.0, 180.0, 80.0, 60.0, 160, 120};
    double max_roll_deg = 2.0;
    double max_pitch_deg = 2.0;
    double min_height = 1.4;
    double max_height = 1.8;
    int max_boxes = 3;
    double background_depth = 100.0;
};

SceneSpec generate_scene(const SceneGeneratorConfig &config, std::uint64_t seed);

} // namespace groundplane
