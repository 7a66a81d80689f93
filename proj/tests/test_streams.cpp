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
#include "groundplane/random.hpp"
#include "groundplane/scene.hpp"
#include "groundplane/streams.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

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

gp::Sample planted(double roll_deg, double pitch_deg, int width = 160, int height = 120, double f = 120.0) {
    gp::SceneSpec spec;
    spec.intrinsics = {f, f, width / 2.0, height / 2.0, width, height};
    spec.ground_normal = gp::rollpitch_to_normal({gp::deg2rad(roll_deg), gp::deg2rad(pitch_deg)});
    spec.camera_height = 1.6;
    spec.boxes = {{0.5, 9.0, 2.0, 2.0, 1.5}};
    return gp::render(spec);
}

gp::PointCloud cloud_of(const gp::Sample &s) { return gp::lift_ground(s.depth, s.mask, s.intrinsics); }

} // namespace

TEST(Isolate, MaskPatterns) {
    const gp::Sample s = planted(0.0, 5.0, 20, 16, 20.0);
    const gp::GroundMask ones(20, 16, 1);
    EXPECT_EQ(gp::isolate(s.depth, ones), s.depth);
    EXPECT_EQ(gp::isolate(s.normals, ones), s.normals);
    EXPECT_EQ(gp::isolate(s.depth, gp::GroundMask(20, 16, 0)).valid_count(), 0U);
    gp::GroundMask checker(20, 16, 0);
    std::size_t expected = 0;
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 20; ++c) {
            checker.ground(c, r) = (r + c) % 2;
            expected += (r + c) % 2 && s.depth.valid(c, r);
        }
    }
    const gp::DepthMap iso = gp::isolate(s.depth, checker);
    EXPECT_EQ(iso.valid_count(), expected);
    for (std::size_t i = 0; i < iso.size(); ++i) {
        if (iso.valid[i]) {
            EXPECT_EQ(iso.depth[i], s.depth.depth[i]);
        }
    }
    EXPECT_EQ(code_of([&] { gp::isolate(s.depth, gp::GroundMask(19, 16, 1)); }), gp::ErrorCode::ShapeMismatch);
}

TEST(LiftGround, PointsOnPlaneAndThreshold) {
    const gp::Sample s = planted(0.0, 0.0);
    const gp::PointCloud cloud = cloud_of(s);
    ASSERT_GT(cloud.size(), 100U);
    for (const gp::CameraPoint &q : cloud.points) {
        EXPECT_NEAR(q.y(), 1.6, 1e-9);
        EXPECT_LE(q.z(), 30.0);
    }

    gp::DepthMap depth(3, 2);
    gp::GroundMask mask(3, 2, 1);
    const double values[6] = {5.0, 29.0, 30.0, 31.0, 100.0, 7.0};
    for (int i = 0; i < 6; ++i) {
        depth.depth[i] = values[i];
        depth.valid[i] = 1;
    }
    const gp::CameraIntrinsics k{3.0, 3.0, 1.0, 1.0, 3, 2};
    const gp::PointCloud lifted = gp::lift_ground(depth, mask, k);
    EXPECT_EQ(lifted.pixel_index, (std::vector<std::size_t>{0, 1, 2, 5}));
    EXPECT_EQ(lifted.points[1], oracle::pixel_point(1, 0, 29.0, k));

    gp::GroundMask two(3, 2, 0);
    two.ground[0] = two.ground[1] = 1;
    EXPECT_EQ(code_of([&] { gp::lift_ground(depth, two, k); }), gp::ErrorCode::TooFewPoints);
}

TEST(PlaneLs, FourExactPoints) {
    const std::vector<gp::CameraPoint> pts = {{0.0, 1.5, 2.0}, {1.0, 1.5, 3.0}, {-2.0, 1.5, 7.0}, {3.0, 1.5, 4.0}};
    gp::PointCloud cloud;
    cloud.points = pts;
    cloud.pixel_index = {0, 1, 2, 3};
    const gp::FitResult fit = gp::fit_plane_ls(cloud);
    EXPECT_LE(oracle::angle_deg(fit.normal.vec(), Eigen::Vector3d(0.0, -1.0, 0.0)), 1e-9);
    EXPECT_NEAR(fit.offset, 1.5, 1e-9);
    EXPECT_EQ(fit.inlier_count, 4U);
}

TEST(PlaneLs, PlantedPlaneTenThousandPoints) {
    const gp::Sample s = planted(7.0, 3.0, 200, 150, 150.0);
    const gp::PointCloud cloud = cloud_of(s);
    ASSERT_GE(cloud.size(), 10000U);
    EXPECT_LE(oracle::angle_deg(gp::fit_plane_ls(cloud).normal.vec(), s.gt_normal->vec()), 1e-6);
}

TEST(PlaneLs, MatchesQrOracleOnNoisyCloud) {
    const gp::Sample s = gp::corrupt(planted(-4.0, 6.0), {0.02, 0.0, 0.2, 0.5, 3});
    const gp::PointCloud cloud = cloud_of(s);
    const Eigen::Vector3d raw = gp::solve_plane_ls(cloud.points);
    const Eigen::Vector3d qr = oracle::plane_qr(cloud.points);
    EXPECT_LE((raw - qr).norm(), 1e-9 * qr.norm());
    EXPECT_LE(oracle::angle_deg(gp::fit_plane_ls(cloud).normal.vec(), -qr), 1e-9);
}

TEST(PlaneLs, Degenerate) {
    gp::PointCloud line;
    for (int i = 0; i < 5; ++i) {
        line.points.emplace_back(1.0 + i, 2.0 + 2.0 * i, 3.0 + 0.5 * i);
        line.pixel_index.push_back(i);
    }
    EXPECT_EQ(code_of([&] { gp::fit_plane_ls(line); }), gp::ErrorCode::SingularSystem);
    gp::PointCloud two;
    two.points = {{0.0, 1.0, 2.0}, {1.0, 1.0, 2.0}};
    two.pixel_index = {0, 1};
    EXPECT_EQ(code_of([&] { gp::fit_plane_ls(two); }), gp::ErrorCode::TooFewPoints);
}

TEST(PlaneLs, ScaleInvariant) {
    const gp::PointCloud cloud = cloud_of(gp::corrupt(planted(3.0, -2.0), {0.01, 0.0, 0.0, 0.5, 4}));
    const gp::UnitNormal ref = gp::fit_plane_ls(cloud).normal;
    for (double scale : {1e-3, 0.37, 12.0, 1e3}) {
        gp::PointCloud scaled = cloud;
        for (gp::CameraPoint &q : scaled.points) {
            q *= scale;
        }
        EXPECT_LE(oracle::angle_deg(gp::fit_plane_ls(scaled).normal.vec(), ref.vec()), 1e-10);
    }
}

TEST(PlaneLs, NoiselessRecoveryAcrossAttitudes) {
    gp::Rng rng(12);
    for (int i = 0; i < 25; ++i) {
        const gp::Sample s = planted(rng.uniform(-15.0, 15.0), rng.uniform(-15.0, 15.0));
        EXPECT_LE(oracle::angle_deg(gp::fit_plane_ls(cloud_of(s)).normal.vec(), s.gt_normal->vec()), 1e-6);
    }
}

TEST(PlaneDsac, NoiselessIsExact) {
    const gp::Sample s = planted(4.0, -3.0);
    const gp::PointCloud cloud = cloud_of(s);
    for (std::uint64_t seed : {0ULL, 1ULL, 999ULL}) {
        gp::DsacConfig cfg;
        cfg.seed = seed;
        const gp::FitResult fit = gp::fit_plane_dsac(cloud, cfg);
        EXPECT_LE(oracle::angle_deg(fit.normal.vec(), s.gt_normal->vec()), 1e-6);
        ASSERT_TRUE(fit.hypotheses);
        EXPECT_EQ(fit.hypotheses->size(), 64U);
        double total = 0.0;
        for (const gp::PlaneHypothesis &h : *fit.hypotheses) {
            EXPECT_LE(oracle::angle_deg(h.normal.vec(), s.gt_normal->vec()), 1e-6);
            total += h.probability;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
        EXPECT_LE(fit.inlier_count, cloud.size());
    }
}

TEST(PlaneDsac, DeterministicAndOrderInvariant) {
    const gp::Sample s = gp::corrupt(planted(2.0, 1.0), {0.01, 0.0, 0.3, 0.5, 9});
    const gp::PointCloud cloud = cloud_of(s);
    gp::DsacConfig cfg;
    cfg.seed = 42;
    const gp::FitResult a = gp::fit_plane_dsac(cloud, cfg);
    const gp::FitResult b = gp::fit_plane_dsac(cloud, cfg);
    EXPECT_EQ(a.normal, b.normal);

    std::vector<std::size_t> perm(cloud.size());
    std::iota(perm.begin(), perm.end(), 0);
    gp::Rng rng(7);
    rng.shuffle(perm.begin(), perm.end());
    gp::PointCloud shuffled;
    for (std::size_t i : perm) {
        shuffled.points.push_back(cloud.points[i]);
        shuffled.pixel_index.push_back(cloud.pixel_index[i]);
    }
    const gp::FitResult c = gp::fit_plane_dsac(shuffled, cfg);
    EXPECT_LE(oracle::angle_deg(a.normal.vec(), c.normal.vec()), 1e-9);
    ASSERT_EQ(a.hypotheses->size(), c.hypotheses->size());
    for (std::size_t j = 0; j < a.hypotheses->size(); ++j) {
        EXPECT_LE(oracle::angle_deg((*a.hypotheses)[j].normal.vec(), (*c.hypotheses)[j].normal.vec()), 1e-9);
        EXPECT_NEAR((*a.hypotheses)[j].probability, (*c.hypotheses)[j].probability, 1e-12);
    }
}

TEST(PlaneDsac, DegenerateClouds) {
    gp::PointCloud same;
    same.points.assign(3, gp::CameraPoint(1.0, 1.0, 5.0));
    same.pixel_index = {0, 1, 2};
    EXPECT_EQ(code_of([&] { gp::fit_plane_dsac(same, {}); }), gp::ErrorCode::AllDegenerate);
    gp::PointCloud two;
    two.points = {{0.0, 1.0, 2.0}, {1.0, 1.0, 2.0}};
    two.pixel_index = {0, 1};
    EXPECT_EQ(code_of([&] { gp::fit_plane_dsac(two, {}); }), gp::ErrorCode::TooFewPoints);
    gp::DsacConfig bad;
    bad.n_hypotheses = 0;
    EXPECT_EQ(code_of([&] { bad.validate(); }), gp::ErrorCode::InvalidArgument);
}

TEST(PlaneDsac, IsDegenerate) {
    EXPECT_TRUE(gp::dsac::is_degenerate({0, 1, 2}, {1, 2, 3}, {2, 3, 4}));
    // Three points on one viewing plane: non-collinear, but the plane contains the camera centre.
    EXPECT_TRUE(gp::dsac::is_degenerate({1, 1, 2}, {2, 2, 4}, {0.5, 1.0, 1.0}));
    EXPECT_FALSE(gp::dsac::is_degenerate({0, 1.5, 2}, {1, 1.5, 3}, {-2, 1.5, 7}));
}

TEST(PlaneDsac, SoftInlierMonotone) {
    const gp::DsacConfig cfg;
    double prev = gp::dsac::soft_inlier(0.0, cfg);
    for (int i = 1; i <= 2000; ++i) {
        const double s = gp::dsac::soft_inlier(i * 1e-4, cfg);
        EXPECT_LE(s, prev);
        prev = s;
    }
    EXPECT_GT(gp::dsac::soft_inlier(0.0, cfg), 0.99);
    EXPECT_LT(gp::dsac::soft_inlier(0.2, cfg), 1e-6);
}

TEST(PlaneDsac, SelectionProbabilitiesAreSoftmax) {
    const std::vector<double> scores = {10.0, 12.0, 9000.0, 8999.0};
    const std::vector<double> p = gp::dsac::selection_probabilities(scores, 0.1);
    double z = 0.0;
    for (double s : scores) {
        z += std::exp(0.1 * (s - 9000.0));
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
        EXPECT_NEAR(p[j], std::exp(0.1 * (scores[j] - 9000.0)) / z, 1e-15);
    }
}

TEST(PlaneDsac, NoWorseThanLsUnderOutliers) {
    std::vector<double> dsac_err;
    std::vector<double> ls_err;
    gp::SceneGeneratorConfig gen;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const gp::Sample s = gp::corrupt(gp::render(gp::generate_scene(gen, seed)), {0.01, 0.0, 0.3, 0.5, seed});
        const gp::PointCloud cloud = cloud_of(s);
        gp::DsacConfig cfg;
        cfg.seed = seed;
        dsac_err.push_back(oracle::angle_deg(gp::fit_plane_dsac(cloud, cfg).normal.vec(), s.gt_normal->vec()));
        ls_err.push_back(oracle::angle_deg(gp::fit_plane_ls(cloud).normal.vec(), s.gt_normal->vec()));
    }
    EXPECT_LE(oracle::median(dsac_err), oracle::median(ls_err));
}

TEST(NormalStream, Examples) {
    gp::NormalMap constant(4, 3);
    const Eigen::Vector3d v = gp::rollpitch_to_normal({0.1, 0.05}).vec();
    for (std::size_t i = 0; i < constant.size(); ++i) {
        constant.normal[i] = v;
        constant.valid[i] = 1;
    }
    EXPECT_LE(oracle::angle_deg(gp::normal_from_normals(constant, gp::GroundMask(4, 3, 1)).vec(), v), 1e-12);

    gp::NormalMap two(2, 1);
    const double a = gp::deg2rad(10.0);
    two.normal[0] = {0.0, -1.0, 0.0};
    two.normal[1] = {std::sin(a), -std::cos(a), 0.0};
    two.valid[0] = two.valid[1] = 1;
    const gp::RollPitch rp = gp::normal_to_rollpitch(gp::normal_from_normals(two, gp::GroundMask(2, 1, 1)));
    EXPECT_NEAR(gp::rad2deg(rp.roll), 5.0, 1e-12);
    EXPECT_NEAR(rp.pitch, 0.0, 1e-15);

    const gp::Sample s = planted(-3.0, 8.0);
    EXPECT_LE(oracle::angle_deg(gp::normal_from_normals(s.normals, s.mask).vec(), s.gt_normal->vec()), 1e-9);
    EXPECT_EQ(code_of([&] { gp::normal_from_normals(constant, gp::GroundMask(4, 3, 0)); }),
              gp::ErrorCode::EmptyMask);
}

TEST(Fuse, Examples) {
    const gp::UnitNormal n = gp::rollpitch_to_normal({0.02, 0.1});
    EXPECT_LE(oracle::angle_deg(gp::fuse(n, n).vec(), n.vec()), 1e-12);
    const gp::UnitNormal plus = gp::rollpitch_to_normal({gp::deg2rad(2.0), 0.1});
    const gp::UnitNormal minus = gp::rollpitch_to_normal({gp::deg2rad(-2.0), 0.1});
    const gp::RollPitch rp = gp::normal_to_rollpitch(gp::fuse(plus, minus));
    EXPECT_NEAR(rp.roll, 0.0, 1e-15);
}

TEST(Fuse, NoWorseThanWorseStreamOnArc) {
    gp::Rng rng(31);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Vector3d d = gp::rollpitch_to_normal({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)}).vec();
        const Eigen::Vector3d n = gp::rollpitch_to_normal({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)}).vec();
        // A point on the geodesic arc between the two stream outputs.
        const double t = rng.uniform();
        const double omega = std::acos(std::clamp(d.dot(n), -1.0, 1.0));
        if (omega < 1e-9) {
            continue;
        }
        const Eigen::Vector3d gt = (std::sin((1.0 - t) * omega) * d + std::sin(t * omega) * n) / std::sin(omega);
        const double fused = oracle::angle_deg(gp::fuse(gp::UnitNormal(d), gp::UnitNormal(n)).vec(), gt);
        EXPECT_LE(fused, std::max(oracle::angle_deg(d, gt), oracle::angle_deg(n, gt)) + 1e-9);
    }
}
