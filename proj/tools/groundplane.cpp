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

// groundplane command-line tool. Exit codes: 0 success, 1 usage, validation
// or check failure, 2 I/O or file-format error.

#include "groundplane/augment.hpp"
#include "groundplane/camera.hpp"
#include "groundplane/error.hpp"
#include "groundplane/eval.hpp"
#include "groundplane/gradcheck.hpp"
#include "groundplane/losses.hpp"
#include "groundplane/random.hpp"
#include "groundplane/sample_io.hpp"
#include "groundplane/scene.hpp"
#include "groundplane/streams.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using groundplane::Error;
using groundplane::ErrorCode;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitIo = 2;

constexpr std::uint64_t kGenerateNoiseStream = 2;

// -0.0 prints as "-0.0" in JSON; fold it to 0.
double clean(double v) { return v + 0.0; }

json to_json(const Eigen::Vector3d &v) { return json::array({clean(v.x()), clean(v.y()), clean(v.z())}); }

groundplane::UnitNormal parse_normal(const std::vector<double> &xyz, const char *flag) {
    const Eigen::Vector3d v(xyz[0], xyz[1], xyz[2]);
    const groundplane::UnitNormal n(v);
    const double len = v.norm();
    if (std::abs(len - 1.0) > 1e-6) {
        std::fprintf(stderr, "warning: %s renormalized from length %.9g\n", flag, len);
    }
    if (!n.vec().isApprox(v / len, 0.0)) {
        std::fprintf(stderr, "warning: %s flipped to the canonical orientation (ny <= 0)\n", flag);
    }
    return n;
}

struct IntrinsicsFlags {
    double fx = 180.0;
    double fy = 180.0;
    double cx = 80.0;
    double cy = 60.0;
    int width = 160;
    int height = 120;

    void add(CLI::App *app) {
        app->add_option("--fx", fx, "focal length x (pixels)");
        app->add_option("--fy", fy, "focal length y (pixels)");
        app->add_option("--cx", cx, "principal point x (pixels)");
        app->add_option("--cy", cy, "principal point y (pixels)");
        app->add_option("--width", width, "image width (pixels)");
        app->add_option("--height", height, "image height (pixels)");
    }

    groundplane::CameraIntrinsics get() const {
        groundplane::CameraIntrinsics k{fx, fy, cx, cy, width, height};
        k.validate();
        return k;
    }
};

struct GeneratorFlags {
    IntrinsicsFlags intrinsics;
    groundplane::SceneGeneratorConfig config;

    void add(CLI::App *app) {
        intrinsics.add(app);
        app->add_option("--scene-max-roll", config.max_roll_deg, "base camera roll limit (degrees)");
        app->add_option("--scene-max-pitch", config.max_pitch_deg, "base camera pitch limit (degrees)");
        app->add_option("--min-camera-height", config.min_height, "camera height lower bound (meters)");
        app->add_option("--max-camera-height", config.max_height, "camera height upper bound (meters)");
        app->add_option("--max-boxes", config.max_boxes, "maximum occluding boxes per scene (count)");
        app->add_option("--background-depth", config.background_depth, "depth of pixels that miss the scene (meters)");
    }

    groundplane::SceneGeneratorConfig get() const {
        groundplane::SceneGeneratorConfig c = config;
        c.intrinsics = intrinsics.get();
        return c;
    }
};

struct NoiseFlags {
    groundplane::NoiseSpec noise;
    double normal_sigma_deg = 0.0;

    void add(CLI::App *app) {
        app->add_option("--depth-noise", noise.depth_sigma_rel, "relative Gaussian depth noise (fraction)");
        app->add_option("--normal-noise", normal_sigma_deg, "normal jitter standard deviation (degrees)");
        app->add_option("--outlier-frac", noise.outlier_frac, "fraction of ground pixels made outliers (0-1)");
        app->add_option("--outlier-height", noise.outlier_height, "outlier height above the ground (meters)");
    }

    groundplane::NoiseSpec get() const {
        groundplane::NoiseSpec n = noise;
        n.normal_sigma = groundplane::deg2rad(normal_sigma_deg);
        n.validate();
        return n;
    }
};

struct DsacFlags {
    groundplane::DsacConfig cfg;
    bool no_refine = false;

    void add(CLI::App *app) {
        app->add_option("--hypotheses", cfg.n_hypotheses, "DSAC hypotheses to sample (count)");
        app->add_option("--inlier-tau", cfg.inlier_tau, "DSAC inlier threshold (meters)");
        app->add_option("--softness-beta", cfg.softness_beta, "DSAC soft-inlier sharpness (1/meters)");
        app->add_option("--temperature-alpha", cfg.temperature_alpha, "DSAC selection softmax scale (1/inlier count)");
        app->add_flag("--no-ls-refine", no_refine, "skip the least-squares refit on DSAC inliers");
    }

    groundplane::DsacConfig get(std::uint64_t seed) const {
        groundplane::DsacConfig c = cfg;
        c.refine_with_ls = !no_refine;
        c.seed = seed;
        c.validate();
        return c;
    }
};

groundplane::AugmentLimits parse_limits(const std::vector<double> &v, std::uint64_t seed) {
    groundplane::AugmentLimits limits{v[0], v[1], seed};
    limits.validate();
    return limits;
}

std::string sample_dir_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06zu", i);
    return buf;
}

void print_config(const CLI::App *cmd) {
    std::cerr << "# effective config: groundplane " << cmd->get_name() << "\n"
              << cmd->config_to_str(true, false) << std::flush;
}

// ---------------------------------------------------------------- generate

struct GenerateCmd {
    fs::path out;
    std::size_t count = 1;
    std::uint64_t seed = 0;
    GeneratorFlags generator;
    NoiseFlags noise;

    void add(CLI::App &app) {
        CLI::App *c = app.add_subcommand("generate", "render synthetic samples into numbered directories");
        c->add_option("--out", out, "output directory (created)")->required();
        c->add_option("--count", count, "number of samples (count)")->check(CLI::PositiveNumber);
        c->add_option("--seed", seed, "64-bit seed (integer); sample i uses seed xor i");
        generator.add(c);
        noise.add(c);
        c->callback([this, c] {
            print_config(c);
            run();
        });
    }

    void run() const {
        const auto gen = generator.get();
        const auto base_noise = noise.get();
        fs::create_directories(out);
        for (std::size_t i = 0; i < count; ++i) {
            const std::uint64_t s = seed ^ static_cast<std::uint64_t>(i);
            groundplane::NoiseSpec n = base_noise;
            n.seed = groundplane::derive_seed(s, kGenerateNoiseStream);
            const groundplane::Sample sample = groundplane::corrupt(groundplane::render(groundplane::generate_scene(gen, s)), n);
            groundplane::save_sample(sample, out / sample_dir_name(i));
        }
        std::cout << "wrote " << count << " samples to " << out.string() << "\n";
    }
};

// ---------------------------------------------------------------------- fit

struct FitCmd {
    fs::path sample;
    std::uint64_t seed = 0;
    double max_depth = groundplane::kDefaultMaxDepth;
    DsacFlags dsac;

    void add(CLI::App &app) {
        CLI::App *c = app.add_subcommand("fit", "fit the ground plane of a sample directory; JSON to stdout");
        c->add_option("sample", sample, "sample directory")->required();
        c->add_option("--seed", seed, "DSAC seed (integer)");
        c->add_option("--max-depth", max_depth, "ignore ground points farther than this (meters)");
        dsac.add(c);
        c->callback([this, c] {
            print_config(c);
            run();
        });
    }

    void run() const {
        const groundplane::Sample s = groundplane::load_sample(sample);
        const auto &k = s.intrinsics;
        const groundplane::PointCloud cloud = groundplane::lift_ground(s.depth, s.mask, k, max_depth);
        const groundplane::FitResult ls = groundplane::fit_plane_ls(cloud);
        const groundplane::FitResult ds = groundplane::fit_plane_dsac(cloud, dsac.get(seed));
        const groundplane::UnitNormal nn = groundplane::normal_from_normals(s.normals, s.mask);
        const groundplane::UnitNormal fused = groundplane::fuse(ds.normal, nn);

        auto entry = [&](const groundplane::UnitNormal &n) {
            json j;
            j["normal"] = to_json(n.vec());
            const groundplane::HorizonLine h = groundplane::normal_to_horizon(n, k);
            const groundplane::RollPitch rp = groundplane::normal_to_rollpitch(n);
            j["roll_deg"] = clean(groundplane::rad2deg(rp.roll));
            j["pitch_deg"] = clean(groundplane::rad2deg(rp.pitch));
            j["horizon"] = {{"theta_deg", clean(groundplane::rad2deg(h.theta))}, {"rho_px", clean(h.rho)}};
            if (s.gt_normal) {
                j["error_deg"] = groundplane::angular_error_deg(n, *s.gt_normal);
            }
            return j;
        };
        json out;
        out["points"] = cloud.size();
        out["ls"] = entry(ls.normal);
        out["ls"]["offset_m"] = ls.offset;
        out["dsac"] = entry(ds.normal);
        out["dsac"]["offset_m"] = ds.offset;
        out["dsac"]["inliers"] = ds.inlier_count;
        out["normal_stream"] = entry(nn);
        out["fused"] = entry(fused);
        if (s.gt_normal) {
            out["gt_normal"] = to_json(s.gt_normal->vec());
        }
        std::cout << out.dump(2) << "\n";
    }
};

// --------------------------------------------------------------------- eval

struct EvalCmd {
    std::optional<fs::path> dataset;
    fs::path out = "report.csv";
    int n = 100;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::vector<double> limits{0.0, 0.0};
    std::vector<std::string> methods{"ls", "dsac", "normal", "fused"};
    double max_depth = groundplane::kDefaultMaxDepth;
    GeneratorFlags generator;
    NoiseFlags noise;
    DsacFlags dsac;

    void add(CLI::App &app) {
        CLI::App *c = app.add_subcommand("eval", "run the benchmark and write a CSV report");
        c->add_option("--dataset", dataset, "sample-set directory (default: synthetic generator)");
        c->add_option("--out", out, "CSV report path");
        c->add_option("--n", n, "number of samples (count)")->check(CLI::PositiveNumber);
        c->add_option("--seed", seed, "64-bit seed (integer); sample i uses seed xor i");
        c->add_option("--jobs", jobs, "worker threads (count)")->check(CLI::PositiveNumber);
        c->add_option("--limits", limits, "augmentation limits: max roll (degrees), max shift (image heights)")
            ->delimiter(',')
            ->expected(2);
        c->add_option("--methods", methods, "comma-separated subset of ls,dsac,normal,fused (names)")->delimiter(',');
        c->add_option("--max-depth", max_depth, "ignore ground points farther than this (meters)");
        generator.add(c);
        noise.add(c);
        dsac.add(c);
        c->callback([this, c] {
            print_config(c);
            run();
        });
    }

    void run() const {
        groundplane::BenchmarkConfig cfg;
        cfg.dataset = dataset;
        cfg.generator = generator.get();
        cfg.methods.clear();
        for (const auto &m : methods) {
            cfg.methods.push_back(groundplane::parse_method(m));
        }
        cfg.noise = noise.get();
        cfg.limits = parse_limits(limits, 0);
        cfg.dsac = dsac.get(0);
        cfg.max_depth = max_depth;
        cfg.n = n;
        cfg.seed = seed;
        cfg.jobs = jobs;
        const groundplane::BenchmarkReport report = groundplane::run_benchmark(cfg);
        std::cerr << "# benchmark: " << report.config << "\n";
        groundplane::write_report(report, out);
        std::cout << groundplane::format_report(report);
    }
};

// ---------------------------------------------------------------- gradcheck

struct GradcheckCmd {
    std::size_t samples = 20;
    int size = 16;
    std::uint64_t seed = 0;
    double tolerance = 1e-4;
    groundplane::GradCheckOptions fd;

    void add(CLI::App &app, int &exit_code) {
        CLI::App *c = app.add_subcommand("gradcheck", "compare analytic loss gradients with central differences");
        c->add_option("--samples", samples, "number of random samples (count)")->check(CLI::PositiveNumber);
        c->add_option("--size", size, "sample width and height (pixels)")->check(CLI::Range(4, 256));
        c->add_option("--seed", seed, "64-bit seed (integer)");
        c->add_option("--step", fd.step, "finite-difference step (fraction of max(1, |x|))");
        c->add_option("--tolerance", tolerance, "maximum allowed error (relative)");
        c->callback([this, c, &exit_code] {
            print_config(c);
            exit_code = run();
        });
    }

    int run() const {
        const auto r = groundplane::run_gradcheck_suite(samples, seed, size, fd);
        json out;
        out["samples"] = r.samples;
        out["coordinates"] = r.coordinates;
        out["max_rel_error_ls"] = r.max_rel_error_ls;
        out["max_rel_error_dsac"] = r.max_rel_error_dsac;
        out["max_rel_error"] = r.max_rel_error();
        out["passed"] = r.max_rel_error() <= tolerance;
        std::cout << out.dump(2) << "\n";
        return r.max_rel_error() <= tolerance ? kExitOk : kExitFailure;
    }
};

// ------------------------------------------------------------------ horizon

struct HorizonCmd {
    std::vector<double> normal;
    IntrinsicsFlags intrinsics;

    void add(CLI::App &app) {
        CLI::App *c = app.add_subcommand("horizon", "horizon line of a ground normal; JSON to stdout");
        c->add_option("--normal", normal, "ground normal x,y,z in the camera frame (unitless)")
            ->delimiter(',')
            ->expected(3)
            ->required();
        intrinsics.add(c);
        c->callback([this, c] {
            print_config(c);
            run();
        });
    }

    void run() const {
        const groundplane::CameraIntrinsics k = intrinsics.get();
        const groundplane::UnitNormal n = parse_normal(normal, "--normal");
        const groundplane::HorizonLine h = groundplane::normal_to_horizon(n, k);
        const groundplane::RollPitch rp = groundplane::normal_to_rollpitch(n);
        json out;
        out["normal"] = to_json(n.vec());
        out["theta_deg"] = clean(groundplane::rad2deg(h.theta));
        out["rho_px"] = clean(h.rho);
        out["rho_units"] = clean(h.rho / k.height);
        out["roll_deg"] = clean(groundplane::rad2deg(rp.roll));
        out["pitch_deg"] = clean(groundplane::rad2deg(rp.pitch));
        std::cout << out.dump(2) << "\n";
    }
};

// ------------------------------------------------------------------- refine

struct RefineCmd {
    fs::path sample;
    std::optional<fs::path> gt;
    fs::path out;
    std::optional<fs::path> trajectory;
    std::string fit = "ls";
    std::uint64_t seed = 0;
    groundplane::RefineOptions options;

    void add(CLI::App &app) {
        CLI::App *c = app.add_subcommand("refine", "gradient descent on a sample's depth and normal maps");
        c->add_option("sample", sample, "input sample directory")->required();
        c->add_option("--gt", gt, "ground-truth sample directory for the supervised terms");
        c->add_option("--out", out, "refined sample directory")->required();
        c->add_option("--trajectory", trajectory, "loss trajectory CSV (default: <out>/trajectory.csv)");
        c->add_option("--steps", options.steps, "gradient steps (count)")->check(CLI::PositiveNumber);
        c->add_option("--step-size", options.step_size, "initial step size (loss units per gradient unit)");
        c->add_option("--lambda-con", options.loss.weights.lambda_con, "consistency weight (dimensionless)");
        c->add_option("--eta-seg", options.loss.weights.eta_seg, "segmentation weight (dimensionless)");
        c->add_option("--fit", fit, "depth-stream plane fit (ls or dsac)")->check(CLI::IsMember({"ls", "dsac"}));
        c->add_option("--seed", seed, "DSAC seed (integer)");
        c->add_option("--max-depth", options.loss.max_depth, "ignore ground points farther than this (meters)");
        c->callback([this, c] {
            print_config(c);
            run();
        });
    }

    void run() {
        options.loss.weights.validate();
        options.loss.fit = fit == "dsac" ? groundplane::PlaneFitMethod::Dsac : groundplane::PlaneFitMethod::LeastSquares;
        options.loss.dsac.seed = seed;
        const groundplane::Sample s = groundplane::load_sample(sample);
        std::optional<groundplane::Sample> g;
        if (gt) {
            g = groundplane::load_sample(*gt);
        }
        const groundplane::RefineResult r = groundplane::refine(s, g ? &*g : nullptr, options);
        groundplane::save_sample(r.sample, out);

        const fs::path csv = trajectory ? *trajectory : out / "trajectory.csv";
        std::ofstream os(csv, std::ios::binary);
        if (!os) {
            throw Error(ErrorCode::IoError, "cannot write " + csv.string());
        }
        os << "step,l_depth,l_normal,l_seg,l_con,total\n";
        char buf[256];
        for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
            const auto &t = r.trajectory[i];
            std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g\n", i, t.l_depth, t.l_normal, t.l_seg,
                          t.l_con, t.total);
            os << buf;
        }
        if (!os) {
            throw Error(ErrorCode::IoError, "failed writing " + csv.string());
        }
        json j;
        j["initial"] = {{"l_con", r.trajectory.front().l_con}, {"total", r.trajectory.front().total}};
        j["final"] = {{"l_con", r.trajectory.back().l_con}, {"total", r.trajectory.back().total}};
        j["rejected_steps"] = r.rejected_steps;
        j["trajectory"] = csv.string();
        std::cout << j.dump(2) << "\n";
    }
};

// ------------------------------------------------------------------ augment

struct AugmentCmd {
    fs::path sample;
    fs::path out;
    std::vector<double> limits{0.0, 0.0};
    std::uint64_t seed = 0;

    void add(CLI::App &app) {
        CLI::App *c = app.add_subcommand("augment", "random roll and vertical shift with ground-truth update");
        c->add_option("sample", sample, "input sample directory")->required();
        c->add_option("--out", out, "augmented sample directory")->required();
        c->add_option("--limits", limits, "max roll (degrees), max shift (image heights)")->delimiter(',')->expected(2);
        c->add_option("--seed", seed, "64-bit seed (integer)");
        c->callback([this, c] {
            print_config(c);
            run();
        });
    }

    void run() const {
        const groundplane::Sample s = groundplane::load_sample(sample);
        const groundplane::AugmentResult r = groundplane::augment(s, parse_limits(limits, seed));
        groundplane::save_sample(r.sample, out);
        json j;
        j["roll_deg"] = clean(groundplane::rad2deg(r.applied.roll));
        j["pitch_deg"] = clean(groundplane::rad2deg(r.applied.pitch));
        j["shift_px"] = clean(r.shift_px);
        j["width"] = r.sample.intrinsics.width;
        j["height"] = r.sample.intrinsics.height;
        if (r.sample.gt_normal) {
            j["gt_normal"] = to_json(r.sample.gt_normal->vec());
        }
        std::cout << j.dump(2) << "\n";
    }
};

int exit_code_for(ErrorCode code) {
    return code == ErrorCode::IoError || code == ErrorCode::FormatError ? kExitIo : kExitFailure;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"groundplane: ground-plane geometry toolkit", "groundplane"};
    app.set_version_flag("--version", "groundplane 0.1.0");
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    int exit_code = kExitOk;
    GenerateCmd generate;
    FitCmd fit;
    EvalCmd eval;
    GradcheckCmd gradcheck;
    HorizonCmd horizon;
    RefineCmd refine;
    AugmentCmd augment;
    generate.add(app);
    fit.add(app);
    eval.add(app);
    gradcheck.add(app, exit_code);
    horizon.add(app);
    refine.add(app);
    augment.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "run '" << app.get_name() << " " << (app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name() + " ")
                  << "--help' for usage\n";
        return kExitFailure;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return exit_code;
}
