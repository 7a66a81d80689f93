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

#include "groundplane/streams.hpp"

#include "groundplane/error.hpp"
#include "groundplane/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

namespace groundplane {

void DsacConfig::validate() const {
    if (n_hypotheses < 1 || !(inlier_tau > 0.0) || !(softness_beta > 0.0) || !(temperature_alpha > 0.0)) {
        throw Error(ErrorCode::InvalidArgument,
                    "DSAC needs n_hypotheses >= 1 and positive tau, beta and alpha");
    }
}

DepthMap isolate(const DepthMap &depth, const GroundMask &mask) {
    require_same_shape(depth.width(), depth.height(), mask.width(), mask.height(), "isolate depth");
    DepthMap out = depth;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!mask.ground[i]) {
            out.valid[i] = 0;
            out.depth[i] = 0.0;
        }
    }
    return out;
}

NormalMap isolate(const NormalMap &normals, const GroundMask &mask) {
    require_same_shape(normals.width(), normals.height(), mask.width(), mask.height(), "isolate normals");
    NormalMap out = normals;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!mask.ground[i]) {
            out.valid[i] = 0;
            out.normal[i].setZero();
        }
    }
    return out;
}

PointCloud lift_ground(const DepthMap &depth, const GroundMask &mask, const CameraIntrinsics &k, double max_depth) {
    require_same_shape(depth.width(), depth.height(), mask.width(), mask.height(), "lift_ground");
    require_same_shape(depth.width(), depth.height(), k.width, k.height, "lift_ground intrinsics");
    PointCloud cloud;
    for (int row = 0; row < depth.height(); ++row) {
        for (int col = 0; col < depth.width(); ++col) {
            const std::size_t i = depth.depth.index(col, row);
            const double z = depth.depth[i];
            if (!mask.ground[i] || !depth.valid[i] || !(z <= max_depth)) {
                continue;
            }
            cloud.points.push_back(unproject(PixelPoint(col, row), z, k));
            cloud.pixel_index.push_back(i);
        }
    }
    if (cloud.size() < 3) {
        std::ostringstream msg;
        msg << "only " << cloud.size() << " ground points within " << max_depth << " m";
        throw Error(ErrorCode::TooFewPoints, msg.str());
    }
    return cloud;
}

Eigen::Vector3d solve_plane_ls(std::span<const CameraPoint> points) {
    if (points.size() < 3) {
        throw Error(ErrorCode::TooFewPoints, "plane fit needs at least 3 points");
    }
    Eigen::Matrix3d CtC = Eigen::Matrix3d::Zero();
    Eigen::Vector3d Ct1 = Eigen::Vector3d::Zero();
    for (const CameraPoint &q : points) {
        CtC.noalias() += q * q.transpose();
        Ct1 += q;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(CtC, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(2);
    if (!(lo > 0.0) || hi / lo > 1e12) {
        throw Error(ErrorCode::SingularSystem,
                    "C^T C is singular (collinear points or a plane through the camera center)");
    }
    return CtC.ldlt().solve(Ct1);
}

namespace {

double mean_offset(const UnitNormal &n, std::span<const CameraPoint> points) {
    double sum = 0.0;
    for (const CameraPoint &q : points) {
        sum += n.vec().dot(q);
    }
    return -sum / static_cast<double>(points.size());
}

std::size_t count_inliers(const UnitNormal &n, double offset, std::span<const CameraPoint> points, double tau) {
    std::size_t count = 0;
    for (const CameraPoint &q : points) {
        if (std::abs(n.vec().dot(q) + offset) <= tau) {
            ++count;
        }
    }
    return count;
}

} // namespace

FitResult fit_plane_ls(const PointCloud &cloud) {
    FitResult fit;
    fit.normal = UnitNormal(solve_plane_ls(cloud.points));
    fit.offset = mean_offset(fit.normal, cloud.points);
    fit.inlier_count = cloud.size();
    return fit;
}

namespace dsac {

std::vector<std::size_t> canonical_order(const PointCloud &cloud) {
    std::vector<std::size_t> order(cloud.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const bool has_pixels = cloud.pixel_index.size() == cloud.size();
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const CameraPoint &pa = cloud.points[a];
        const CameraPoint &pb = cloud.points[b];
        const std::size_t ia = has_pixels ? cloud.pixel_index[a] : 0;
        const std::size_t ib = has_pixels ? cloud.pixel_index[b] : 0;
        return std::tie(ia, pa.x(), pa.y(), pa.z()) < std::tie(ib, pb.x(), pb.y(), pb.z());
    });
    return order;
}

bool is_degenerate(const CameraPoint &a, const CameraPoint &b, const CameraPoint &c) {
    const Eigen::Vector3d e1 = b - a;
    const Eigen::Vector3d e2 = c - a;
    const Eigen::Vector3d m = e1.cross(e2);
    const double len = m.norm();
    // Collinear points, or a plane through the camera centre (image-collinear pixels).
    return len <= 1e-9 * e1.norm() * e2.norm() || std::abs(m.dot(a)) <= 1e-9 * len * a.norm();
}

std::vector<MinimalSet> sample_minimal_sets(std::span<const CameraPoint> points, const DsacConfig &cfg) {
    cfg.validate();
    if (points.size() < 3) {
        throw Error(ErrorCode::TooFewPoints, "DSAC needs at least 3 points");
    }
    Rng rng(derive_seed(cfg.seed, points.size()));
    const std::size_t wanted = static_cast<std::size_t>(cfg.n_hypotheses);
    const std::size_t max_attempts = 100 * wanted;
    std::vector<MinimalSet> sets;
    sets.reserve(wanted);
    for (std::size_t attempt = 0; attempt < max_attempts && sets.size() < wanted; ++attempt) {
        const std::size_t a = rng.index(points.size());
        std::size_t b = rng.index(points.size() - 1);
        b += b >= a ? 1 : 0;
        std::size_t c = rng.index(points.size() - 2);
        for (std::size_t skip : {std::min(a, b), std::max(a, b)}) {
            c += c >= skip ? 1 : 0;
        }
        if (!is_degenerate(points[a], points[b], points[c])) {
            sets.push_back({a, b, c});
        }
    }
    if (sets.empty()) {
        throw Error(ErrorCode::AllDegenerate, "no non-collinear minimal set found");
    }
    return sets;
}

double smooth_distance(double signed_distance) { return std::hypot(signed_distance, kDistanceSmoothing); }

double soft_inlier(double distance, const DsacConfig &cfg) {
    const double x = cfg.softness_beta * (cfg.inlier_tau - distance);
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> selection_probabilities(std::span<const double> scores, double alpha) {
    std::vector<double> p(scores.size());
    if (scores.empty()) {
        return p;
    }
    const double top = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        p[j] = std::exp(alpha * (scores[j] - top));
        sum += p[j];
    }
    for (double &v : p) {
        v /= sum;
    }
    return p;
}

} // namespace dsac

FitResult fit_plane_dsac(const PointCloud &cloud, const DsacConfig &cfg) {
    cfg.validate();
    if (cloud.size() < 3) {
        throw Error(ErrorCode::TooFewPoints, "DSAC needs at least 3 points");
    }
    const std::vector<std::size_t> order = dsac::canonical_order(cloud);
    std::vector<CameraPoint> pts(cloud.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        pts[i] = cloud.points[order[i]];
    }

    const std::vector<MinimalSet> sets = dsac::sample_minimal_sets(pts, cfg);
    std::vector<PlaneHypothesis> hyps;
    hyps.reserve(sets.size());
    std::vector<double> scores;
    scores.reserve(sets.size());
    for (const MinimalSet &set : sets) {
        const CameraPoint &a = pts[set[0]];
        PlaneHypothesis h;
        h.normal = UnitNormal((pts[set[1]] - a).cross(pts[set[2]] - a));
        h.offset = -h.normal.vec().dot(a);
        for (const CameraPoint &q : pts) {
            h.score += dsac::soft_inlier(dsac::smooth_distance(h.normal.vec().dot(q) + h.offset), cfg);
        }
        scores.push_back(h.score);
        hyps.push_back(h);
    }
    const std::vector<double> probs = dsac::selection_probabilities(scores, cfg.temperature_alpha);
    for (std::size_t j = 0; j < hyps.size(); ++j) {
        hyps[j].probability = probs[j];
    }

    const auto best = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    FitResult fit;
    fit.normal = hyps[best].normal;
    fit.offset = hyps[best].offset;

    if (cfg.refine_with_ls) {
        std::vector<CameraPoint> inliers;
        for (const CameraPoint &q : pts) {
            if (std::abs(fit.normal.vec().dot(q) + fit.offset) <= cfg.inlier_tau) {
                inliers.push_back(q);
            }
        }
        try {
            const UnitNormal refined(solve_plane_ls(inliers));
            fit.offset = mean_offset(refined, inliers);
            fit.normal = refined;
        } catch (const Error &) {
            // Too few or degenerate inliers: keep the minimal-set hypothesis.
        }
    }
    fit.inlier_count = count_inliers(fit.normal, fit.offset, pts, cfg.inlier_tau);
    fit.hypotheses = std::move(hyps);
    return fit;
}

UnitNormal normal_from_normals(const NormalMap &normals, const GroundMask &mask) {
    require_same_shape(normals.width(), normals.height(), mask.width(), mask.height(), "normal_from_normals");
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::size_t count = 0;
    for (std::size_t i = 0; i < normals.size(); ++i) {
        if (mask.ground[i] && normals.valid[i]) {
            sum += normals.normal[i];
            ++count;
        }
    }
    if (count == 0) {
        throw Error(ErrorCode::EmptyMask, "no masked pixel carries a valid normal");
    }
    return UnitNormal(sum / static_cast<double>(count));
}

UnitNormal fuse(const UnitNormal &depth_normal, const UnitNormal &normal_normal) {
    const Eigen::Vector3d sum = depth_normal.vec() + normal_normal.vec();
    if (sum.norm() < 1e-12) {
        throw Error(ErrorCode::OppositeNormals, "stream normals cancel");
    }
    return UnitNormal(sum);
}

} // namespace groundplane
