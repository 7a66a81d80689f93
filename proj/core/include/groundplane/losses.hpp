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

#include "groundplane/maps.hpp"
#include "groundplane/streams.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace groundplane {

struct LossWeights {
    double lambda_con = 0.05; // consistency weight
    double eta_seg = 1.0;     // segmentation weight

    void validate() const;
};

enum class PlaneFitMethod { LeastSquares, Dsac };

struct LossBreakdown {
    double l_depth = 0.0;
    double l_normal = 0.0;
    double l_seg = 0.0;
    double l_con = 0.0; // radians
    double total = 0.0;
    std::optional<Grid<double>> grad_depth;            // d total / d depth
    std::optional<Grid<Eigen::Vector3d>> grad_normals; // d total / d normal (raw, unnormalized)
};

struct DepthLoss {
    double value = 0.0;
    Grid<double> grad;
};

struct NormalLoss {
    double value = 0.0;
    Grid<Eigen::Vector3d> grad;
};

// Mean squared depth error over masked pixels valid in both maps.
DepthLoss depth_loss(const DepthMap &pred, const DepthMap &gt, const GroundMask &mask);

// Mean over masked pixels of the squared Euclidean normal difference.
NormalLoss normal_loss(const NormalMap &pred, const NormalMap &gt, const GroundMask &mask);

// Mean binary cross-entropy of per-pixel ground probabilities in (0, 1).
double seg_loss(const Grid<double> &prob, const GroundMask &gt);

struct ConsistencyLoss {
    double angle = 0.0; // radians in [0, pi]
    Eigen::Vector3d grad_depth_normal = Eigen::Vector3d::Zero();
    Eigen::Vector3d grad_normal_normal = Eigen::Vector3d::Zero();
};

// Angle between two (not necessarily unit) vectors. The gradient uses the
// arccos chain rule with the cosine clamped to [-1 + 1e-12, 1 - 1e-12].
ConsistencyLoss consistency_loss(const Eigen::Vector3d &depth_normal, const Eigen::Vector3d &normal_normal);

enum class Neighborhood { Four, FullGround };

// Mean over neighbor pairs (i, j) of ((Q_i - Q_j) . N_i)^2 on masked pixels
// with valid depth and normal. Throws EmptyMask below two such pixels.
double local_orthogonality_energy(const DepthMap &depth, const NormalMap &normals, const GroundMask &mask,
                                  const CameraIntrinsics &k, Neighborhood neighborhood);

struct PipelineLossOptions {
    LossWeights weights;
    PlaneFitMethod fit = PlaneFitMethod::LeastSquares;
    DsacConfig dsac;
    double max_depth = kDefaultMaxDepth;
    bool with_gradients = true;
};

// Full weighted objective on a predicted sample. Without `gt` the supervised
// depth/normal terms are zero and segmentation is scored against the
// prediction's own mask. Without `ground_prob` the segmentation stream is taken
// to be ideal (probabilities 1 - 1e-12 / 1e-12 from the predicted mask).
// Gradients cover the depth and normal maps only; the mask is held fixed.
LossBreakdown pipeline_loss(const Sample &pred, const Sample *gt, const PipelineLossOptions &options,
                            const Grid<double> *ground_prob = nullptr);

struct RefineOptions {
    PipelineLossOptions loss;
    int steps = 200;
    double step_size = 1e-2;
};

struct RefineResult {
    Sample sample;
    std::vector<LossBreakdown> trajectory; // initial state plus one entry per step, gradients dropped
    int rejected_steps = 0;
};

// Gradient descent on the depth and normal maps. Normals are renormalized
// after every step. A step that raises the total is rejected and halves the
// step size; a step that takes it past ten times the initial total throws
// DivergedLoss.
RefineResult refine(const Sample &sample, const Sample *gt, const RefineOptions &options);

} // namespace groundplane
