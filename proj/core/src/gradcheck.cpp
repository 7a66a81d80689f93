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

#include "groundplane/gradcheck.hpp"

#include "groundplane/error.hpp"
#include "groundplane/random.hpp"
#include "groundplane/scene.hpp"

#include <algorithm>
#include <cmath>

namespace groundplane {

namespace {

double scaled_error(double analytic, double numeric, const GradCheckOptions &fd) {
    const double diff = std::abs(analytic - numeric);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale >= fd.small_gradient) {
        return diff / scale;
    }
    return diff * fd.rel_tolerance / fd.abs_tolerance;
}

} // namespace

GradCheckResult check_gradients(const Sample &pred, const Sample *gt, const PipelineLossOptions &options,
                                const GradCheckOptions &fd) {
    PipelineLossOptions with = options;
    with.with_gradients = true;
    PipelineLossOptions without = options;
    without.with_gradients = false;

    const LossBreakdown analytic = pipeline_loss(pred, gt, with);
    const Grid<double> &gd = *analytic.grad_depth;
    const Grid<Eigen::Vector3d> &gn = *analytic.grad_normals;

    GradCheckResult result;
    Sample probe = pred;
    auto central = [&](double &x) {
        const double x0 = x;
        const double h = fd.step * std::max(1.0, std::abs(x0));
        x = x0 + h;
        const double up = pipeline_loss(probe, gt, without).total;
        x = x0 - h;
        const double down = pipeline_loss(probe, gt, without).total;
        x = x0;
        return (up - down) / (2.0 * h);
    };
    auto record = [&](double a, double f) {
        result.max_rel_error = std::max(result.max_rel_error, scaled_error(a, f, fd));
        result.max_abs_grad = std::max(result.max_abs_grad, std::abs(a));
        ++result.coordinates;
    };

    for (std::size_t i = 0; i < probe.depth.size(); ++i) {
        if (!probe.depth.valid[i]) {
            continue;
        }
        record(gd[i], central(probe.depth.depth[i]));
    }
    for (std::size_t i = 0; i < probe.normals.size(); ++i) {
        if (!probe.normals.valid[i]) {
            continue;
        }
        for (int c = 0; c < 3; ++c) {
            record(gn[i][c], central(probe.normals.normal[i][c]));
        }
    }
    return result;
}

GradCheckPair make_gradcheck_pair(std::uint64_t seed, int size) {
    if (size < 4) {
        throw Error(ErrorCode::InvalidArgument, "gradcheck sample size must be at least 4");
    }
    Rng rng(derive_seed(seed, 31));
    SceneSpec spec;
    const double f = 3.0 * size; // every row sees ground at least 5 degrees below the horizon
    const double c = 0.5 * (size - 1);
    spec.intrinsics = {f, f, c, c, size, size};
    spec.ground_normal = rollpitch_to_normal({deg2rad(rng.uniform(-5.0, 5.0)), deg2rad(rng.uniform(15.0, 25.0))});
    spec.camera_height = rng.uniform(1.4, 1.8);
    spec.seed = seed;

    GradCheckPair pair;
    pair.gt = render(spec);
    NoiseSpec noise;
    noise.depth_sigma_rel = 0.01;
    noise.normal_sigma = deg2rad(2.0);
    noise.seed = derive_seed(seed, 32);
    pair.pred = corrupt(pair.gt, noise);
    return pair;
}

GradCheckSuiteResult run_gradcheck_suite(std::size_t samples, std::uint64_t seed, int size,
                                         const GradCheckOptions &fd) {
    GradCheckSuiteResult result;
    for (std::size_t s = 0; s < samples; ++s) {
        const GradCheckPair pair = make_gradcheck_pair(seed ^ s, size);
        PipelineLossOptions options;
        options.dsac.seed = derive_seed(seed ^ s, 33);

        options.fit = PlaneFitMethod::LeastSquares;
        const GradCheckResult ls = check_gradients(pair.pred, &pair.gt, options, fd);
        options.fit = PlaneFitMethod::Dsac;
        const GradCheckResult ds = check_gradients(pair.pred, &pair.gt, options, fd);

        result.max_rel_error_ls = std::max(result.max_rel_error_ls, ls.max_rel_error);
        result.max_rel_error_dsac = std::max(result.max_rel_error_dsac, ds.max_rel_error);
        result.coordinates += ls.coordinates + ds.coordinates;
        ++result.samples;
    }
    return result;
}

} // namespace groundplane
