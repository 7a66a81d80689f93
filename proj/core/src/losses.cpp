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

#include "groundplane/losses.hpp"

#include "groundplane/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace groundplane {

namespace {

constexpr double kCosineClamp = 1e-12;
constexpr double kIdealProbability = 1e-12;
constexpr double kDivergenceFactor = 10.0;
constexpr double kDivergenceFloor = 1e-9;

double orientation_sign(const Eigen::Vector3d &v) { return v.y() > 0.0 ? -1.0 : 1.0; }

// Orients a hypothesis normal so the camera centre lies on its positive side.
// Smooth for every non-degenerate minimal set, unlike the ny <= 0 rule.
double camera_side_sign(const Eigen::Vector3d &m, const CameraPoint &on_plane) {
    return m.dot(on_plane) > 0.0 ? -1.0 : 1.0;
}

// Depth-stream plane normal as a differentiable function of the lifted points.
// `vec` is canonically oriented but not normalized; the consistency angle is
// scale invariant.
class DepthStreamNormal {
  public:
    virtual ~DepthStreamNormal() = default;
    virtual Eigen::Vector3d vec() const = 0;
    // Accumulates d L / d q_i into grad (same order as the cloud) given g = d L / d vec.
    virtual void backward(const Eigen::Vector3d &g, std::vector<Eigen::Vector3d> &grad) const = 0;
};

class LeastSquaresNormal final : public DepthStreamNormal {
  public:
    explicit LeastSquaresNormal(const PointCloud &cloud) : cloud_(cloud) {
        raw_ = solve_plane_ls(cloud.points);
        sign_ = orientation_sign(raw_);
    }

    Eigen::Vector3d vec() const override { return sign_ * raw_; }

    void backward(const Eigen::Vector3d &g, std::vector<Eigen::Vector3d> &grad) const override {
        // raw = G^-1 r with G = sum q q^T, r = sum q, so
        // d raw = G^-1 sum_i [(1 - q_i.raw) dq_i - q_i (raw.dq_i)].
        Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
        for (const CameraPoint &q : cloud_.points) {
            G.noalias() += q * q.transpose();
        }
        const Eigen::Vector3d w = G.ldlt().solve(sign_ * g);
        for (std::size_t i = 0; i < cloud_.size(); ++i) {
            const CameraPoint &q = cloud_.points[i];
            grad[i] += (1.0 - q.dot(raw_)) * w - w.dot(q) * raw_;
        }
    }

  private:
    const PointCloud &cloud_;
    Eigen::Vector3d raw_;
    double sign_ = 1.0;
};

// Probability-weighted mean of the DSAC hypothesis normals.
class SoftDsacNormal final : public DepthStreamNormal {
  public:
    SoftDsacNormal(const PointCloud &cloud, const DsacConfig &cfg) : cfg_(cfg) {
        order_ = dsac::canonical_order(cloud);
        pts_.resize(cloud.size());
        for (std::size_t i = 0; i < order_.size(); ++i) {
            pts_[i] = cloud.points[order_[i]];
        }
        sets_ = dsac::sample_minimal_sets(pts_, cfg);
        const std::size_t n_hyp = sets_.size();
        cross_.resize(n_hyp);
        normal_.resize(n_hyp);
        std::vector<double> scores(n_hyp, 0.0);
        for (std::size_t j = 0; j < n_hyp; ++j) {
            const CameraPoint &a = pts_[sets_[j][0]];
            cross_[j] = (pts_[sets_[j][1]] - a).cross(pts_[sets_[j][2]] - a);
            normal_[j] = camera_side_sign(cross_[j], a) * cross_[j].normalized();
            for (const CameraPoint &q : pts_) {
                scores[j] += dsac::soft_inlier(dsac::smooth_distance(normal_[j].dot(q - a)), cfg_);
            }
        }
        prob_ = dsac::selection_probabilities(scores, cfg_.temperature_alpha);
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        for (std::size_t j = 0; j < n_hyp; ++j) {
            mean += prob_[j] * normal_[j];
        }
        sign_ = orientation_sign(mean);
        vec_ = sign_ * mean;
    }

    Eigen::Vector3d vec() const override { return vec_; }

    void backward(const Eigen::Vector3d &g, std::vector<Eigen::Vector3d> &grad) const override {
        const Eigen::Vector3d g_mean = sign_ * g;
        const std::size_t n_hyp = sets_.size();
        double expected = 0.0;
        for (std::size_t j = 0; j < n_hyp; ++j) {
            expected += prob_[j] * g_mean.dot(normal_[j]);
        }

        std::vector<Eigen::Vector3d> gq(pts_.size(), Eigen::Vector3d::Zero());
        for (std::size_t j = 0; j < n_hyp; ++j) {
            const Eigen::Vector3d &h = normal_[j];
            const CameraPoint &a = pts_[sets_[j][0]];
            // Softmax backward: d L / d score_j.
            const double g_score = cfg_.temperature_alpha * prob_[j] * (g_mean.dot(h) - expected);
            Eigen::Vector3d g_h = prob_[j] * g_mean;
            Eigen::Vector3d g_a = Eigen::Vector3d::Zero();
            for (std::size_t i = 0; i < pts_.size(); ++i) {
                const Eigen::Vector3d diff = pts_[i] - a;
                const double r = h.dot(diff);
                const double dist = dsac::smooth_distance(r);
                const double s = dsac::soft_inlier(dist, cfg_);
                const double g_r = g_score * (-cfg_.softness_beta * s * (1.0 - s)) * (r / dist);
                gq[i] += g_r * h;
                g_a -= g_r * h;
                g_h += g_r * diff;
            }
            // h = sign * m / |m| with m = (b - a) x (c - a).
            const Eigen::Vector3d &m = cross_[j];
            const double len = m.norm();
            const Eigen::Vector3d m_hat = m / len;
            const double sign = camera_side_sign(m, a);
            const Eigen::Vector3d g_m = sign * (g_h - m_hat * m_hat.dot(g_h)) / len;
            const Eigen::Vector3d e1 = pts_[sets_[j][1]] - a;
            const Eigen::Vector3d e2 = pts_[sets_[j][2]] - a;
            const Eigen::Vector3d g_e1 = e2.cross(g_m);
            const Eigen::Vector3d g_e2 = g_m.cross(e1);
            gq[sets_[j][1]] += g_e1;
            gq[sets_[j][2]] += g_e2;
            gq[sets_[j][0]] += g_a - g_e1 - g_e2;
        }
        for (std::size_t i = 0; i < order_.size(); ++i) {
            grad[order_[i]] += gq[i];
        }
    }

  private:
    DsacConfig cfg_;
    std::vector<std::size_t> order_;
    std::vector<CameraPoint> pts_;
    std::vector<MinimalSet> sets_;
    std::vector<Eigen::Vector3d> cross_;
    std::vector<Eigen::Vector3d> normal_;
    std::vector<double> prob_;
    Eigen::Vector3d vec_;
    double sign_ = 1.0;
};

} // namespace

void LossWeights::validate() const {
    if (!(lambda_con >= 0.0) || !(eta_seg >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "loss weights must be non-negative");
    }
}

DepthLoss depth_loss(const DepthMap &pred, const DepthMap &gt, const GroundMask &mask) {
    require_same_shape(pred.width(), pred.height(), gt.width(), gt.height(), "depth_loss pred vs gt");
    require_same_shape(pred.width(), pred.height(), mask.width(), mask.height(), "depth_loss mask");
    DepthLoss out{0.0, Grid<double>(pred.width(), pred.height(), 0.0)};
    std::size_t count = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (mask.ground[i] && pred.valid[i] && gt.valid[i]) {
            const double d = pred.depth[i] - gt.depth[i];
            out.value += d * d;
            out.grad[i] = 2.0 * d;
            ++count;
        }
    }
    if (count == 0) {
        throw Error(ErrorCode::EmptyMask, "depth_loss has no masked pixel valid in both maps");
    }
    out.value /= static_cast<double>(count);
    for (double &g : out.grad.data()) {
        g /= static_cast<double>(count);
    }
    return out;
}

NormalLoss normal_loss(const NormalMap &pred, const NormalMap &gt, const GroundMask &mask) {
    require_same_shape(pred.width(), pred.height(), gt.width(), gt.height(), "normal_loss pred vs gt");
    require_same_shape(pred.width(), pred.height(), mask.width(), mask.height(), "normal_loss mask");
    NormalLoss out{0.0, Grid<Eigen::Vector3d>(pred.width(), pred.height(), Eigen::Vector3d::Zero())};
    std::size_t count = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (mask.ground[i] && pred.valid[i] && gt.valid[i]) {
            const Eigen::Vector3d d = pred.normal[i] - gt.normal[i];
            out.value += d.squaredNorm();
            out.grad[i] = 2.0 * d;
            ++count;
        }
    }
    if (count == 0) {
        throw Error(ErrorCode::EmptyMask, "normal_loss has no masked pixel valid in both maps");
    }
    out.value /= static_cast<double>(count);
    for (Eigen::Vector3d &g : out.grad.data()) {
        g /= static_cast<double>(count);
    }
    return out;
}

double seg_loss(const Grid<double> &prob, const GroundMask &gt) {
    require_same_shape(prob.width(), prob.height(), gt.width(), gt.height(), "seg_loss");
    if (prob.size() == 0) {
        throw Error(ErrorCode::EmptyMask, "seg_loss on an empty image");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const double p = prob[i];
        if (!(p > 0.0 && p < 1.0)) {
            throw Error(ErrorCode::ProbOutOfRange, "ground probabilities must lie strictly in (0, 1)");
        }
        sum -= gt.ground[i] ? std::log(p) : std::log1p(-p);
    }
    return sum / static_cast<double>(prob.size());
}

ConsistencyLoss consistency_loss(const Eigen::Vector3d &a, const Eigen::Vector3d &b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (!(na > 0.0) || !(nb > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "consistency_loss needs nonzero vectors");
    }
    ConsistencyLoss out;
    // atan2 keeps full precision near coincidence where acos(1 - eps) does not.
    out.angle = std::atan2(a.cross(b).norm(), a.dot(b));
    const double cosine = a.dot(b) / (na * nb);
    const double clamped = std::clamp(cosine, -1.0 + kCosineClamp, 1.0 - kCosineClamp);
    const double d_angle = -1.0 / std::sqrt(1.0 - clamped * clamped);
    out.grad_depth_normal = d_angle * (b / (na * nb) - cosine * a / (na * na));
    out.grad_normal_normal = d_angle * (a / (na * nb) - cosine * b / (nb * nb));
    return out;
}

double local_orthogonality_energy(const DepthMap &depth, const NormalMap &normals, const GroundMask &mask,
                                  const CameraIntrinsics &k, Neighborhood neighborhood) {
    require_same_shape(depth.width(), depth.height(), normals.width(), normals.height(), "orthogonality maps");
    require_same_shape(depth.width(), depth.height(), mask.width(), mask.height(), "orthogonality mask");
    require_same_shape(depth.width(), depth.height(), k.width, k.height, "orthogonality intrinsics");

    const int w = depth.width();
    const int h = depth.height();
    Grid<std::uint8_t> usable(w, h, 0);
    std::vector<std::size_t> pixels;
    std::vector<CameraPoint> points(depth.size(), CameraPoint::Zero());
    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            const std::size_t i = depth.depth.index(col, row);
            if (mask.ground[i] && depth.valid[i] && normals.valid[i]) {
                usable[i] = 1;
                pixels.push_back(i);
                points[i] = unproject(PixelPoint(col, row), depth.depth[i], k);
            }
        }
    }
    if (pixels.size() < 2) {
        throw Error(ErrorCode::EmptyMask, "orthogonality energy needs at least two masked pixels");
    }

    double energy = 0.0;
    double pairs = 0.0;
    if (neighborhood == Neighborhood::Four) {
        constexpr int offsets[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (std::size_t i : pixels) {
            const int col = static_cast<int>(i % w);
            const int row = static_cast<int>(i / w);
            for (const auto &o : offsets) {
                const int c = col + o[0];
                const int r = row + o[1];
                if (c < 0 || c >= w || r < 0 || r >= h || !usable(c, r)) {
                    continue;
                }
                const double e = (points[i] - points[usable.index(c, r)]).dot(normals.normal[i]);
                energy += e * e;
                pairs += 1.0;
            }
        }
    } else {
        // sum_j ((P_i - P_j) . N_i)^2 = M (P_i . N_i)^2 + N_i^T S N_i for centered
        // points P (sum P_j = 0) with scatter S = sum P_j P_j^T.
        CameraPoint centroid = CameraPoint::Zero();
        for (std::size_t i : pixels) {
            centroid += points[i];
        }
        centroid /= static_cast<double>(pixels.size());
        Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
        for (std::size_t i : pixels) {
            const CameraPoint p = points[i] - centroid;
            scatter.noalias() += p * p.transpose();
        }
        // Far ground points make S large while N^T S N is tiny; re-accumulating S
        // in its own eigenbasis keeps the near-null direction free of cancellation.
        const Eigen::Matrix3d basis = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(scatter).eigenvectors();
        Eigen::Matrix3d scatter_b = Eigen::Matrix3d::Zero();
        for (std::size_t i : pixels) {
            const Eigen::Vector3d p = basis.transpose() * (points[i] - centroid);
            scatter_b.noalias() += p * p.transpose();
        }
        const double m = static_cast<double>(pixels.size());
        for (std::size_t i : pixels) {
            const Eigen::Vector3d &n = normals.normal[i];
            const double along = (points[i] - centroid).dot(n);
            const Eigen::Vector3d nb = basis.transpose() * n;
            energy += m * along * along + nb.dot(scatter_b * nb);
        }
        pairs = m * (m - 1.0);
    }
    return pairs > 0.0 ? energy / pairs : 0.0;
}

LossBreakdown pipeline_loss(const Sample &pred, const Sample *gt, const PipelineLossOptions &options,
                            const Grid<double> *ground_prob) {
    pred.validate();
    options.weights.validate();
    const int w = pred.intrinsics.width;
    const int h = pred.intrinsics.height;
    if (gt) {
        gt->validate();
        require_same_shape(w, h, gt->intrinsics.width, gt->intrinsics.height, "pipeline_loss pred vs gt");
    }
    const bool grads = options.with_gradients;

    LossBreakdown out;
    Grid<double> grad_depth;
    Grid<Eigen::Vector3d> grad_normals;
    if (grads) {
        grad_depth = Grid<double>(w, h, 0.0);
        grad_normals = Grid<Eigen::Vector3d>(w, h, Eigen::Vector3d::Zero());
    }

    if (gt) {
        DepthLoss dl = depth_loss(pred.depth, gt->depth, pred.mask);
        NormalLoss nl = normal_loss(pred.normals, gt->normals, pred.mask);
        out.l_depth = dl.value;
        out.l_normal = nl.value;
        if (grads) {
            grad_depth = std::move(dl.grad);
            grad_normals = std::move(nl.grad);
        }
    }

    const GroundMask &seg_target = gt ? gt->mask : pred.mask;
    if (ground_prob) {
        out.l_seg = seg_loss(*ground_prob, seg_target);
    } else {
        Grid<double> ideal(w, h, kIdealProbability);
        for (std::size_t i = 0; i < ideal.size(); ++i) {
            if (pred.mask.ground[i]) {
                ideal[i] = 1.0 - kIdealProbability;
            }
        }
        out.l_seg = seg_loss(ideal, seg_target);
    }

    // Depth stream.
    const PointCloud cloud = lift_ground(pred.depth, pred.mask, pred.intrinsics, options.max_depth);
    std::unique_ptr<DepthStreamNormal> depth_normal;
    if (options.fit == PlaneFitMethod::LeastSquares) {
        depth_normal = std::make_unique<LeastSquaresNormal>(cloud);
    } else {
        depth_normal = std::make_unique<SoftDsacNormal>(cloud, options.dsac);
    }

    // Normal stream.
    Eigen::Vector3d normal_sum = Eigen::Vector3d::Zero();
    std::size_t normal_count = 0;
    for (std::size_t i = 0; i < pred.normals.size(); ++i) {
        if (pred.mask.ground[i] && pred.normals.valid[i]) {
            normal_sum += pred.normals.normal[i];
            ++normal_count;
        }
    }
    if (normal_count == 0) {
        throw Error(ErrorCode::EmptyMask, "no masked pixel carries a valid normal");
    }
    const Eigen::Vector3d normal_mean = normal_sum / static_cast<double>(normal_count);
    const double normal_sign = orientation_sign(normal_mean);

    const ConsistencyLoss con = consistency_loss(depth_normal->vec(), normal_sign * normal_mean);
    out.l_con = con.angle;
    const LossWeights &wts = options.weights;
    out.total = out.l_depth + out.l_normal + wts.eta_seg * out.l_seg + wts.lambda_con * out.l_con;

    if (grads) {
        const double lambda = wts.lambda_con;
        std::vector<Eigen::Vector3d> grad_points(cloud.size(), Eigen::Vector3d::Zero());
        depth_normal->backward(con.grad_depth_normal, grad_points);
        for (std::size_t p = 0; p < cloud.size(); ++p) {
            const std::size_t i = cloud.pixel_index[p];
            const int col = static_cast<int>(i % w);
            const int row = static_cast<int>(i / w);
            // q = depth * ray, so d q / d depth is the unit-z pixel ray.
            const Eigen::Vector3d ray = pixel_ray(PixelPoint(col, row), pred.intrinsics);
            grad_depth[i] += lambda * grad_points[p].dot(ray);
        }
        const Eigen::Vector3d g_pixel =
            lambda * normal_sign * con.grad_normal_normal / static_cast<double>(normal_count);
        for (std::size_t i = 0; i < pred.normals.size(); ++i) {
            if (pred.mask.ground[i] && pred.normals.valid[i]) {
                grad_normals[i] += g_pixel;
            }
        }
        out.grad_depth = std::move(grad_depth);
        out.grad_normals = std::move(grad_normals);
    }
    return out;
}

namespace {

LossBreakdown without_gradients(LossBreakdown b) {
    b.grad_depth.reset();
    b.grad_normals.reset();
    return b;
}

} // namespace

RefineResult refine(const Sample &sample, const Sample *gt, const RefineOptions &options) {
    if (options.steps < 1 || !(options.step_size > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "refine needs steps >= 1 and step_size > 0");
    }
    PipelineLossOptions loss_options = options.loss;
    loss_options.with_gradients = true;

    RefineResult result;
    result.sample = sample;
    LossBreakdown current = pipeline_loss(result.sample, gt, loss_options);
    result.trajectory.push_back(without_gradients(current));

    const double diverged = kDivergenceFactor * std::max(current.total, kDivergenceFloor);
    double step = options.step_size;
    for (int it = 0; it < options.steps; ++it) {
        Sample candidate = result.sample;
        bool feasible = true;
        for (std::size_t i = 0; i < candidate.depth.size(); ++i) {
            const double g = (*current.grad_depth)[i];
            if (g != 0.0) {
                const double z = candidate.depth.depth[i] - step * g;
                feasible = feasible && z > 0.0 && std::isfinite(z);
                candidate.depth.depth[i] = z;
            }
            const Eigen::Vector3d &gn = (*current.grad_normals)[i];
            if (!gn.isZero(0.0)) {
                Eigen::Vector3d n = candidate.normals.normal[i] - step * gn;
                const double len = n.norm();
                feasible = feasible && len > 0.0 && std::isfinite(len);
                candidate.normals.normal[i] = n / len;
            }
        }

        std::optional<LossBreakdown> next;
        if (feasible) {
            try {
                next = pipeline_loss(candidate, gt, loss_options);
            } catch (const Error &e) {
                if (e.code() != ErrorCode::SingularSystem && e.code() != ErrorCode::TooFewPoints) {
                    throw;
                }
            }
        }
        if (next && next->total > diverged) {
            throw Error(ErrorCode::DivergedLoss, "loss grew past ten times its initial value; lower the step size");
        }
        if (!next || next->total > current.total) {
            step *= 0.5;
            ++result.rejected_steps;
        } else {
            result.sample = std::move(candidate);
            current = std::move(*next);
        }
        result.trajectory.push_back(without_gradients(current));
    }
    return result;
}

} // namespace groundplane
