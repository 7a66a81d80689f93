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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace groundplane {

inline constexpr double kDefaultMaxDepth = 30.0; // meters

// Ground points in the camera frame with the flat pixel index each came from.
struct PointCloud {
    std::vector<CameraPoint> points;
    std::vector<std::size_t> pixel_index;

    std::size_t size() const { return points.size(); }
};

struct PlaneHypothesis {
    UnitNormal normal;
    double offset = 0.0; // plane: normal . q + offset = 0
    double score = 0.0;  // soft inlier count
    double probability = 0.0;
};

struct FitResult {
    UnitNormal normal;
    double offset = 0.0; // camera height for a ground plane below the camera
    std::size_t inlier_count = 0;
    std::optional<std::vector<PlaneHypothesis>> hypotheses;
};

struct DsacConfig {
    int n_hypotheses = 64;
    double inlier_tau = 0.05;       // meters
    double softness_beta = 100.0;   // 1/meters
    double temperature_alpha = 0.1; // softmax scale on soft inlier counts
    bool refine_with_ls = true;
    std::uint64_t seed = 0;

    void validate() const;
};

using MinimalSet = std::array<std::size_t, 3>;

DepthMap isolate(const DepthMap &depth, const GroundMask &mask);
NormalMap isolate(const NormalMap &normals, const GroundMask &mask);

// One point per masked, valid pixel with depth <= max_depth. Throws
// TooFewPoints when fewer than three survive.
PointCloud lift_ground(const DepthMap &depth, const GroundMask &mask, const CameraIntrinsics &k,
                       double max_depth = kDefaultMaxDepth);

// Unnormalized least-squares solution of C n = 1. Throws SingularSystem when
// cond(C^T C) > 1e12 and TooFewPoints below three points.
Eigen::Vector3d solve_plane_ls(std::span<const CameraPoint> points);

FitResult fit_plane_ls(const PointCloud &cloud);
FitResult fit_plane_dsac(const PointCloud &cloud, const DsacConfig &cfg);

// Mean of the masked, valid per-pixel normals. Throws EmptyMask.
UnitNormal normal_from_normals(const NormalMap &normals, const GroundMask &mask);

UnitNormal fuse(const UnitNormal &depth_normal, const UnitNormal &normal_normal);

namespace dsac {

// Smoothing length of the point-plane distance (meters). Keeps the soft
// inlier score differentiable where a point lies on a hypothesis plane.
inline constexpr double kDistanceSmoothing = 1e-3;

// Permutation sorting the cloud by source pixel (then coordinates), so the
// sampler sees the same sequence whatever order the points arrive in.
std::vector<std::size_t> canonical_order(const PointCloud &cloud);

// Draws up to cfg.n_hypotheses non-collinear triples from `points`, giving up
// after 100 * n_hypotheses attempts. Throws AllDegenerate when none is found.
std::vector<MinimalSet> sample_minimal_sets(std::span<const CameraPoint> points, const DsacConfig &cfg);

// True for collinear points or a plane through the camera centre (points on
// one image line), measured relative to the edge lengths.
bool is_degenerate(const CameraPoint &a, const CameraPoint &b, const CameraPoint &c);

double smooth_distance(double signed_distance);

double soft_inlier(double distance, const DsacConfig &cfg);

// Numerically stable softmax of alpha * scores.
std::vector<double> selection_probabilities(std::span<const double> scores, double alpha);

} // namespace dsac

} // namespace groundplane
