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

#include "groundplane/augment.hpp"
#include "groundplane/camera.hpp"
#include "groundplane/gradcheck.hpp"
#include "groundplane/losses.hpp"
#include "groundplane/scene.hpp"
#include "groundplane/streams.hpp"

#include <benchmark/benchmark.h>

namespace gp = groundplane;

namespace {

gp::Sample noisy_sample(std::uint64_t seed) {
    const gp::Sample clean = gp::render(gp::generate_scene(gp::SceneGeneratorConfig{}, seed));
    gp::NoiseSpec noise;
    noise.depth_sigma_rel = 0.01;
    noise.normal_sigma = gp::deg2rad(2.0);
    noise.outlier_frac = 0.3;
    noise.seed = seed;
    return gp::corrupt(clean, noise);
}

void BM_Render(benchmark::State &state) {
    const gp::SceneSpec spec = gp::generate_scene(gp::SceneGeneratorConfig{}, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gp::render(spec));
    }
}
BENCHMARK(BM_Render)->Unit(benchmark::kMillisecond);

void BM_FitPlaneLs(benchmark::State &state) {
    const gp::Sample s = noisy_sample(2);
    const gp::PointCloud cloud = gp::lift_ground(s.depth, s.mask, s.intrinsics);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gp::fit_plane_ls(cloud));
    }
    state.counters["points"] = static_cast<double>(cloud.size());
}
BENCHMARK(BM_FitPlaneLs)->Unit(benchmark::kMicrosecond);

void BM_FitPlaneDsac(benchmark::State &state) {
    const gp::Sample s = noisy_sample(3);
    const gp::PointCloud cloud = gp::lift_ground(s.depth, s.mask, s.intrinsics);
    gp::DsacConfig cfg;
    cfg.n_hypotheses = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(gp::fit_plane_dsac(cloud, cfg));
    }
    state.counters["points"] = static_cast<double>(cloud.size());
}
BENCHMARK(BM_FitPlaneDsac)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_PipelineLoss(benchmark::State &state) {
    const gp::GradCheckPair pair = gp::make_gradcheck_pair(4, 32);
    gp::PipelineLossOptions options;
    options.fit = state.range(0) == 0 ? gp::PlaneFitMethod::LeastSquares : gp::PlaneFitMethod::Dsac;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gp::pipeline_loss(pair.pred, &pair.gt, options));
    }
}
BENCHMARK(BM_PipelineLoss)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_Augment(benchmark::State &state) {
    const gp::Sample s = gp::render(gp::generate_scene(gp::SceneGeneratorConfig{}, 5));
    for (auto _ : state) {
        benchmark::DoNotOptimize(gp::augment_with(s, gp::deg2rad(10.0), 12));
    }
}
BENCHMARK(BM_Augment)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
