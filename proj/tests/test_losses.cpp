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


#include "groundplane/error.hpp"
#include "groundplane/gradcheck.hpp"
#include "groundplane/losses.hpp"
#include "groundplane/random.hpp"
#include "groundplane/scene.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace gp = groundplane;

namespace {

template <typename F> gp::ErrorCode code_of(F &&f) {
    try {
        f();
    } catch (const gp::Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "expected groundplane::Error";
    return gp::ErrorCode::InvalidArgument;
}

gp::DepthMap random_depth(gp::Rng &rng, int w, int h) {
    gp::DepthMap d(w, h);
    for (std::size_t i = 0; i < d.size(); ++i) {
        d.depth[i] = rng.uniform(1.0, 20.0);
        d.valid[i] = 1;
    }
    return d;
}

gp::NormalMap random_normals(gp::Rng &rng, int w, int h) {
    gp::NormalMap n(w, h);
    for (std::size_t i = 0; i < n.size(); ++i) {
        n.normal[i] = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
        n.valid[i] = 1;
    }
    return n;
}

gp::GroundMask random_mask(gp::Rng &rng, int w, int h) {
    gp::GroundMask m(w, h);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.ground[i] = rng.uniform() < 0.7;
    }
    m.ground[0] = 1;
    return m;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

// The error measure of the gradient-fidelity check: relative where the gradient
// is at least 1e-6, otherwise the absolute error rescaled so 1e-8 maps to 1e-4.
double fidelity_err(double analytic, double numeric) {
    if (std::max(std::abs(analytic), std::abs(numeric)) >= 1e-6) {
        return rel_err(analytic, numeric);
    }
    return std::abs(analytic - numeric) * 1e-4 / 1e-8;
}

gp::Sample tiny_plane() {
    gp::SceneSpec spec;
    spec.intrinsics = {14.0, 14.0, 6.0, 2.0, 12, 10};
    spec.ground_normal = gp::rollpitch_to_normal({0.05, 0.3});
    spec.camera_height = 1.5;
    return gp::render(spec);
}

} // namespace

TEST(DepthLoss, Examples) {
    gp::Rng rng(1);
    const gp::DepthMap gt = random_depth(rng, 8, 8);
    const gp::GroundMask ones(8, 8, 1);
    const gp::DepthLoss zero = gp::depth_loss(gt, gt, ones);
    EXPECT_EQ(zero.value, 0.0);
    for (double g : zero.grad.data()) {
        EXPECT_EQ(g, 0.0);
    }
    gp::DepthMap off = gt;
    for (double &d : off.depth.data()) {
        d += 0.1;
    }
    EXPECT_NEAR(gp::depth_loss(off, gt, ones).value, 0.01, 1e-15);
    EXPECT_EQ(code_of([&] { gp::depth_loss(gt, gt, gp::GroundMask(8, 8, 0)); }), gp::ErrorCode::EmptyMask);
}

TEST(DepthLoss, GradientMatchesFiniteDifferences) {
    gp::Rng rng(2);
    const gp::DepthMap pred = random_depth(rng, 8, 8);
    const gp::DepthMap gt = random_depth(rng, 8, 8);
    const gp::GroundMask mask = random_mask(rng, 8, 8);
    const gp::DepthLoss loss = gp::depth_loss(pred, gt, mask);
    const double h = 1e-4;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        gp::DepthMap plus = pred;
        gp::DepthMap minus = pred;
        plus.depth[i] += h;
        minus.depth[i] -= h;
        const double fd = (gp::depth_loss(plus, gt, mask).value - gp::depth_loss(minus, gt, mask).value) / (2.0 * h);
        if (mask.ground[i]) {
            EXPECT_LE(rel_err(loss.grad[i], fd), 1e-6);
        } else {
            EXPECT_EQ(loss.grad[i], 0.0);
            EXPECT_EQ(fd, 0.0);
        }
    }
}

TEST(NormalLoss, Examples) {
    gp::Rng rng(3);
    const gp::NormalMap gt = random_normals(rng, 8, 8);
    EXPECT_EQ(gp::normal_loss(gt, gt, gp::GroundMask(8, 8, 1)).value, 0.0);
    gp::NormalMap flipped = gt;
    flipped.normal[5] = -flipped.normal[5];
    gp::GroundMask one(8, 8, 0);
    one.ground[5] = 1;
    EXPECT_NEAR(gp::normal_loss(flipped, gt, one).value, 4.0, 1e-14);
}

TEST(NormalLoss, GradientMatchesFiniteDifferences) {
    gp::Rng rng(4);
    const gp::NormalMap pred = random_normals(rng, 8, 8);
    const gp::NormalMap gt = random_normals(rng, 8, 8);
    const gp::GroundMask mask = random_mask(rng, 8, 8);
    const gp::NormalLoss loss = gp::normal_loss(pred, gt, mask);
    const double h = 1e-4;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            gp::NormalMap plus = pred;
            gp::NormalMap minus = pred;
            plus.normal[i][c] += h;
            minus.normal[i][c] -= h;
            const double fd =
                (gp::normal_loss(plus, gt, mask).value - gp::normal_loss(minus, gt, mask).value) / (2.0 * h);
            if (mask.ground[i]) {
                EXPECT_LE(rel_err(loss.grad[i][c], fd), 1e-6);
            } else {
                EXPECT_EQ(loss.grad[i][c], 0.0);
            }
        }
    }
}

TEST(SegLoss, Examples) {
    const gp::GroundMask ones(6, 5, 1);
    EXPECT_NEAR(gp::seg_loss(gp::Grid<double>(6, 5, 1.0 - 1e-12), ones), 0.0, 1e-11);
    EXPECT_NEAR(gp::seg_loss(gp::Grid<double>(6, 5, 0.5), ones), 0.693147, 1e-6);
    EXPECT_EQ(code_of([&] { gp::seg_loss(gp::Grid<double>(6, 5, 1.0), ones); }), gp::ErrorCode::ProbOutOfRange);
    EXPECT_EQ(code_of([&] { gp::seg_loss(gp::Grid<double>(6, 5, 0.0), ones); }), gp::ErrorCode::ProbOutOfRange);
}

TEST(SegLoss, MatchesDirectSummation) {
    gp::Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        gp::Grid<double> prob(9, 7);
        for (double &p : prob.data()) {
            p = rng.uniform(1e-6, 1.0 - 1e-6);
        }
        const gp::GroundMask mask = random_mask(rng, 9, 7);
        double sum = 0.0;
        for (int r = 0; r < 7; ++r) {
            for (int c = 0; c < 9; ++c) {
                const double p = prob(c, r);
                sum += mask.ground(c, r) ? -std::log(p) : -std::log(1.0 - p);
            }
        }
        EXPECT_NEAR(gp::seg_loss(prob, mask), sum / 63.0, 1e-12);
    }
}

TEST(ConsistencyLoss, Examples) {
    const Eigen::Vector3d up(0.0, -1.0, 0.0);
    EXPECT_EQ(gp::consistency_loss(up, up).angle, 0.0);
    const double a = gp::deg2rad(5.0);
    EXPECT_NEAR(gp::consistency_loss(up, {std::sin(a), -std::cos(a), 0.0}).angle, 0.0872665, 1e-7);
}

TEST(ConsistencyLoss, SymmetricWithFiniteDifferenceGradients) {
    gp::Rng rng(6);
    const double h = 1e-6;
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Vector3d d(rng.normal(), rng.normal(), rng.normal());
        const Eigen::Vector3d n(rng.normal(), rng.normal(), rng.normal());
        const gp::ConsistencyLoss loss = gp::consistency_loss(d, n);
        EXPECT_EQ(loss.angle, gp::consistency_loss(n, d).angle);
        EXPECT_NEAR(loss.angle, oracle::angle_deg(d, n) * 3.14159265358979323846 / 180.0, 1e-12);
        if (loss.angle < 1e-3 || loss.angle > 3.14159265358979323846 - 1e-3) {
            continue;
        }
        for (int c = 0; c < 3; ++c) {
            Eigen::Vector3d e = Eigen::Vector3d::Zero();
            e[c] = h;
            const double fd_d =
                (gp::consistency_loss(d + e, n).angle - gp::consistency_loss(d - e, n).angle) / (2.0 * h);
            const double fd_n =
                (gp::consistency_loss(d, n + e).angle - gp::consistency_loss(d, n - e).angle) / (2.0 * h);
            EXPECT_LE(std::abs(loss.grad_depth_normal[c] - fd_d), 1e-5 * std::max(1.0, std::abs(fd_d)));
            EXPECT_LE(std::abs(loss.grad_normal_normal[c] - fd_n), 1e-5 * std::max(1.0, std::abs(fd_n)));
        }
    }
}

TEST(Orthogonality, ZeroOnPlanarRender) {
    const gp::Sample s = tiny_plane();
    for (gp::Neighborhood nb : {gp::Neighborhood::Four, gp::Neighborhood::FullGround}) {
        EXPECT_LE(gp::local_orthogonality_energy(s.depth, s.normals, s.mask, s.intrinsics, nb), 1e-12);
    }
}

TEST(Orthogonality, PerturbedPixelMatchesPairOracle) {
    gp::Sample s = tiny_plane();
    ASSERT_GT(s.mask.count(), 20U);
    std::size_t target = 0;
    while (!s.mask.ground[target]) {
        ++target;
    }
    target += s.mask.width() + 1;
    ASSERT_TRUE(s.mask.ground[target]);
    s.depth.depth[target] += 0.1;
    for (bool four : {true, false}) {
        const double energy = gp::local_orthogonality_energy(
            s.depth, s.normals, s.mask, s.intrinsics, four ? gp::Neighborhood::Four : gp::Neighborhood::FullGround);
        const double expected = oracle::orthogonality_pairs(s.depth, s.normals, s.mask, s.intrinsics, four);
        EXPECT_GT(energy, 0.0);
        EXPECT_NEAR(energy, expected, 1e-12);
    }
    gp::GroundMask single(s.mask.width(), s.mask.height(), 0);
    single.ground[target] = 1;
    EXPECT_EQ(code_of([&] {
                  gp::local_orthogonality_energy(s.depth, s.normals, single, s.intrinsics, gp::Neighborhood::Four);
              }),
              gp::ErrorCode::EmptyMask);
}

TEST(PipelineLoss, GroundTruthIsTheMinimum) {
    const gp::GradCheckPair pair = gp::make_gradcheck_pair(3, 16);
    for (gp::PlaneFitMethod fit : {gp::PlaneFitMethod::LeastSquares, gp::PlaneFitMethod::Dsac}) {
        gp::PipelineLossOptions opt;
        opt.fit = fit;
        const gp::LossBreakdown b = gp::pipeline_loss(pair.gt, &pair.gt, opt);
        EXPECT_EQ(b.l_depth, 0.0);
        EXPECT_EQ(b.l_normal, 0.0);
        EXPECT_LE(b.l_con, 1e-9);
        EXPECT_LE(b.l_seg, 1e-11);
        EXPECT_NEAR(b.total, opt.weights.eta_seg * b.l_seg + opt.weights.lambda_con * b.l_con, 1e-15);
    }
}

TEST(PipelineLoss, TotalIsWeightedSum) {
    const gp::GradCheckPair pair = gp::make_gradcheck_pair(4, 16);
    gp::PipelineLossOptions opt;
    opt.weights = {0.05, 0.7};
    gp::Grid<double> prob(16, 16, 0.8);
    const gp::LossBreakdown b = gp::pipeline_loss(pair.pred, &pair.gt, opt, &prob);
    EXPECT_NEAR(b.total, b.l_depth + b.l_normal + 0.7 * b.l_seg + 0.05 * b.l_con, 1e-12);
    EXPECT_GT(b.l_con, 0.0);

    opt.weights.lambda_con = 0.0;
    const gp::LossBreakdown without = gp::pipeline_loss(pair.pred, &pair.gt, opt, &prob);
    EXPECT_NEAR(b.total - without.total, 0.05 * b.l_con, 1e-12);
}

TEST(PipelineLoss, GradientsMatchIndependentFiniteDifferences) {
    for (gp::PlaneFitMethod fit : {gp::PlaneFitMethod::LeastSquares, gp::PlaneFitMethod::Dsac}) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            const gp::GradCheckPair pair = gp::make_gradcheck_pair(seed, 16);
            gp::PipelineLossOptions opt;
            opt.fit = fit;
            opt.dsac.seed = seed;
            const gp::LossBreakdown b = gp::pipeline_loss(pair.pred, &pair.gt, opt);
            opt.with_gradients = false;
            auto total = [&](const gp::Sample &s) { return gp::pipeline_loss(s, &pair.gt, opt).total; };
            gp::Rng rng(100 + seed);
            double worst = 0.0;
            for (int probe = 0; probe < 40; ++probe) {
                const std::size_t i = rng.index(pair.pred.depth.size());
                if (!pair.pred.depth.valid[i] || !pair.pred.normals.valid[i]) {
                    continue;
                }
                gp::Sample plus = pair.pred;
                gp::Sample minus = pair.pred;
                const double hd = 3e-7 * std::max(1.0, pair.pred.depth.depth[i]);
                plus.depth.depth[i] += hd;
                minus.depth.depth[i] -= hd;
                worst = std::max(worst, fidelity_err((*b.grad_depth)[i], (total(plus) - total(minus)) / (2.0 * hd)));

                const int c = static_cast<int>(rng.index(3));
                plus = pair.pred;
                minus = pair.pred;
                const double hn = 3e-7;
                plus.normals.normal[i][c] += hn;
                minus.normals.normal[i][c] -= hn;
                worst = std::max(worst,
                                 fidelity_err((*b.grad_normals)[i][c], (total(plus) - total(minus)) / (2.0 * hn)));
            }
            EXPECT_LE(worst, 1e-4) << "fit " << static_cast<int>(fit) << " seed " << seed;
        }
    }
}

TEST(PipelineLoss, GradCheckSuitePasses) {
    const gp::GradCheckSuiteResult r = gp::run_gradcheck_suite(3, 11);
    EXPECT_EQ(r.samples, 3U);
    EXPECT_GT(r.coordinates, 0U);
    EXPECT_LE(r.max_rel_error(), 1e-4);
}

TEST(Refine, StartingAtGroundTruthStaysPut) {
    const gp::GradCheckPair pair = gp::make_gradcheck_pair(5, 16);
    gp::RefineOptions opt;
    opt.steps = 20;
    const gp::RefineResult r = gp::refine(pair.gt, &pair.gt, opt);
    ASSERT_EQ(r.trajectory.size(), 21U);
    for (const gp::LossBreakdown &b : r.trajectory) {
        EXPECT_NEAR(b.total, r.trajectory.front().total, 1e-12);
        EXPECT_LE(b.l_con, 1e-9);
    }
}

TEST(Refine, ConsistencyOnlyShrinksConsistencyLoss) {
    const gp::GradCheckPair pair = gp::make_gradcheck_pair(6, 32);
    gp::RefineOptions opt;
    opt.loss.weights = {1.0, 0.0};
    opt.steps = 200;
    opt.step_size = 1e-2;
    const gp::RefineResult r = gp::refine(pair.pred, nullptr, opt);
    ASSERT_EQ(r.trajectory.size(), 201U);
    for (std::size_t k = 5; k + 1 < r.trajectory.size(); ++k) {
        EXPECT_LE(r.trajectory[k + 1].l_con, r.trajectory[k].l_con);
    }
    EXPECT_LE(r.trajectory.back().l_con, 0.1 * r.trajectory.front().l_con);
    EXPECT_GT(r.trajectory.front().l_con, 0.0);
    for (std::size_t i = 0; i < r.sample.normals.size(); ++i) {
        if (r.sample.normals.valid[i]) {
            EXPECT_NEAR(r.sample.normals.normal[i].norm(), 1.0, 1e-12);
        }
    }
}

TEST(Refine, HugeStepDiverges) {
    const gp::GradCheckPair pair = gp::make_gradcheck_pair(7, 16);
    gp::RefineOptions opt;
    opt.step_size = 1e6;
    EXPECT_EQ(code_of([&] { gp::refine(pair.pred, &pair.gt, opt); }), gp::ErrorCode::DivergedLoss);
}

TEST(Refine, Deterministic) {
    const gp::GradCheckPair pair = gp::make_gradcheck_pair(8, 16);
    gp::RefineOptions opt;
    opt.steps = 10;
    opt.loss.fit = gp::PlaneFitMethod::Dsac;
    const gp::RefineResult a = gp::refine(pair.pred, &pair.gt, opt);
    const gp::RefineResult b = gp::refine(pair.pred, &pair.gt, opt);
    EXPECT_EQ(a.sample, b.sample);
    EXPECT_EQ(a.trajectory.back().total, b.trajectory.back().total);
}

TEST(Refine, RejectsBadOptions) {
    const gp::GradCheckPair pair = gp::make_gradcheck_pair(9, 16);
    gp::RefineOptions opt;
    opt.steps = 0;
    EXPECT_EQ(code_of([&] { gp::refine(pair.pred, nullptr, opt); }), gp::ErrorCode::InvalidArgument);
    opt.steps = 5;
    opt.step_size = 0.0;
    EXPECT_EQ(code_of([&] { gp::refine(pair.pred, nullptr, opt); }), gp::ErrorCode::InvalidArgument);
    opt.step_size = 1e-2;
    opt.loss.weights.lambda_con = -1.0;
    EXPECT_EQ(code_of([&] { gp::refine(pair.pred, nullptr, opt); }), gp::ErrorCode::InvalidArgument);
}
