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

#include "groundplane/eval.hpp"

#include "groundplane/error.hpp"
#include "groundplane/random.hpp"
#include "groundplane/sample_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace groundplane {

namespace {

constexpr const char *kHeader = "method,n,mean_deg,median_deg,theta_deg,rho_e2units,seed,failures";

constexpr std::uint64_t kAugmentStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kDsacStream = 3;

struct MethodOutcome {
    bool ok = false;
    double error_deg = 0.0;
    double theta_deg = 0.0;
    double rho_units = 0.0;
};

// Errors that mark a sample as failed for a method instead of aborting the run.
bool is_sample_failure(ErrorCode code) {
    switch (code) {
    case ErrorCode::TooFewPoints:
    case ErrorCode::SingularSystem:
    case ErrorCode::AllDegenerate:
    case ErrorCode::EmptyMask:
    case ErrorCode::EmptyGround:
    case ErrorCode::OppositeNormals:
    case ErrorCode::CropTooSmall:
    case ErrorCode::HorizonAtInfinity:
        return true;
    default:
        return false;
    }
}

std::vector<std::filesystem::path> list_dataset(const std::filesystem::path &root) {
    std::error_code ec;
    if (!std::filesystem::is_directory(root, ec)) {
        throw Error(ErrorCode::IoError, "dataset directory not found: " + root.string());
    }
    std::vector<std::filesystem::path> dirs;
    for (const auto &entry : std::filesystem::directory_iterator(root)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_directory() && !name.empty() &&
            std::all_of(name.begin(), name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end(), [](const auto &a, const auto &b) {
        const std::string sa = a.filename().string();
        const std::string sb = b.filename().string();
        return sa.size() != sb.size() ? sa.size() < sb.size() : sa < sb;
    });
    return dirs;
}

class SampleRunner {
  public:
    SampleRunner(const BenchmarkConfig &config, std::vector<std::filesystem::path> dataset)
        : config_(config), dataset_(std::move(dataset)) {}

    std::vector<MethodOutcome> run(std::size_t index) const {
        const std::uint64_t seed = config_.seed ^ static_cast<std::uint64_t>(index);
        std::vector<MethodOutcome> out(config_.methods.size());
        Sample noisy;
        try {
            const Sample base = dataset_.empty() ? render(generate_scene(config_.generator, seed))
                                                 : load_sample(dataset_[index]);
            if (!base.gt_normal) {
                throw Error(ErrorCode::FormatError, "benchmark sample has no gt_normal");
            }
            AugmentLimits limits = config_.limits;
            limits.seed = derive_seed(seed, kAugmentStream);
            const AugmentResult augmented = augment(base, limits);
            NoiseSpec noise = config_.noise;
            noise.seed = derive_seed(seed, kNoiseStream);
            noisy = corrupt(augmented.sample, noise);
        } catch (const Error &e) {
            if (!is_sample_failure(e.code())) {
                throw;
            }
            return out;
        }

        const UnitNormal gt = *noisy.gt_normal;
        const HorizonLine gt_horizon = normal_to_horizon(gt, noisy.intrinsics);

        std::optional<PointCloud> cloud;
        std::optional<UnitNormal> dsac_normal;
        std::optional<UnitNormal> stream_normal;
        auto get_cloud = [&]() -> const PointCloud & {
            if (!cloud) {
                cloud = lift_ground(noisy.depth, noisy.mask, noisy.intrinsics, config_.max_depth);
            }
            return *cloud;
        };
        auto get_dsac = [&]() {
            if (!dsac_normal) {
                DsacConfig cfg = config_.dsac;
                cfg.seed = derive_seed(seed, kDsacStream);
                dsac_normal = fit_plane_dsac(get_cloud(), cfg).normal;
            }
            return *dsac_normal;
        };
        auto get_stream = [&]() {
            if (!stream_normal) {
                stream_normal = normal_from_normals(noisy.normals, noisy.mask);
            }
            return *stream_normal;
        };

        for (std::size_t m = 0; m < config_.methods.size(); ++m) {
            try {
                UnitNormal est;
                switch (config_.methods[m]) {
                case Method::LeastSquares:
                    est = fit_plane_ls(get_cloud()).normal;
                    break;
                case Method::Dsac:
                    est = get_dsac();
                    break;
                case Method::NormalStream:
                    est = get_stream();
                    break;
                case Method::Fused:
                    est = fuse(get_dsac(), get_stream());
                    break;
                }
                const HorizonError h = horizon_errors(normal_to_horizon(est, noisy.intrinsics), gt_horizon,
                                                      noisy.intrinsics);
                out[m] = {true, angular_error_deg(est, gt), h.theta_deg, h.rho_units};
            } catch (const Error &e) {
                if (!is_sample_failure(e.code())) {
                    throw;
                }
            }
        }
        return out;
    }

  private:
    const BenchmarkConfig &config_;
    std::vector<std::filesystem::path> dataset_;
};

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string config_echo(const BenchmarkConfig &c) {
    std::ostringstream os;
    os.precision(9);
    os << "source=" << (c.dataset ? c.dataset->string() : std::string("generator")) << " n=" << c.n
       << " seed=" << c.seed << " jobs=" << c.jobs << " methods=";
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
        os << (i ? ";" : "") << method_name(c.methods[i]);
    }
    os << " noise.depth_sigma_rel=" << c.noise.depth_sigma_rel << " noise.normal_sigma_deg="
       << rad2deg(c.noise.normal_sigma) << " noise.outlier_frac=" << c.noise.outlier_frac
       << " noise.outlier_height_m=" << c.noise.outlier_height << " limits.max_roll_deg=" << c.limits.max_roll_deg
       << " limits.max_pitch_units=" << c.limits.max_pitch_units << " dsac.n_hypotheses=" << c.dsac.n_hypotheses
       << " dsac.inlier_tau_m=" << c.dsac.inlier_tau << " dsac.softness_beta=" << c.dsac.softness_beta
       << " dsac.temperature_alpha=" << c.dsac.temperature_alpha << " dsac.refine_with_ls=" << c.dsac.refine_with_ls
       << " max_depth_m=" << c.max_depth;
    return os.str();
}

double parse_double(const std::string &field, std::size_t line) {
    char *end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (field.empty() || *end != '\0') {
        throw Error(ErrorCode::FormatError, "report line " + std::to_string(line) + ": bad number '" + field + "'");
    }
    return v;
}

std::uint64_t parse_uint(const std::string &field, std::size_t line) {
    char *end = nullptr;
    const unsigned long long v = std::strtoull(field.c_str(), &end, 10);
    if (field.empty() || *end != '\0' || field[0] == '-') {
        throw Error(ErrorCode::FormatError, "report line " + std::to_string(line) + ": bad integer '" + field + "'");
    }
    return v;
}

} // namespace

double angular_error_deg(const UnitNormal &est, const UnitNormal &gt) {
    return rad2deg(std::acos(std::clamp(est.vec().dot(gt.vec()), -1.0, 1.0)));
}

std::string_view method_name(Method m) {
    switch (m) {
    case Method::LeastSquares:
        return "ls";
    case Method::Dsac:
        return "dsac";
    case Method::NormalStream:
        return "normal";
    case Method::Fused:
        return "fused";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (Method m : all_methods()) {
        if (method_name(m) == name) {
            return m;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "' (ls, dsac, normal, fused)");
}

std::vector<Method> all_methods() {
    return {Method::LeastSquares, Method::Dsac, Method::NormalStream, Method::Fused};
}

void BenchmarkConfig::validate() const {
    if (n < 1) {
        throw Error(ErrorCode::InvalidArgument, "benchmark needs n >= 1");
    }
    if (jobs < 1) {
        throw Error(ErrorCode::InvalidArgument, "benchmark needs jobs >= 1");
    }
    if (!(max_depth > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "max_depth must be positive");
    }
    noise.validate();
    limits.validate();
    dsac.validate();
    generator.intrinsics.validate();
}

BenchmarkReport run_benchmark(const BenchmarkConfig &config) {
    config.validate();
    std::vector<std::filesystem::path> dataset;
    std::size_t count = static_cast<std::size_t>(config.n);
    if (config.dataset) {
        dataset = list_dataset(*config.dataset);
        if (dataset.empty()) {
            throw Error(ErrorCode::IoError, "dataset has no numbered sample directories: " + config.dataset->string());
        }
        count = std::min(count, dataset.size());
    }

    const SampleRunner runner(config, std::move(dataset));
    std::vector<std::vector<MethodOutcome>> outcomes(count);
    std::vector<std::exception_ptr> failures(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                outcomes[i] = runner.run(i);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    const int jobs = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(config.jobs), count));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) {
            pool.emplace_back(worker);
        }
        for (auto &t : pool) {
            t.join();
        }
    }
    for (const auto &f : failures) {
        if (f) {
            std::rethrow_exception(f);
        }
    }

    BenchmarkReport report;
    report.config = config_echo(config);
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
        MethodRow row;
        row.method = config.methods[m];
        row.seed = config.seed;
        std::vector<double> errors;
        std::vector<double> all(count, std::numeric_limits<double>::quiet_NaN());
        double sum = 0.0;
        double theta = 0.0;
        double rho = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const MethodOutcome &o = outcomes[i][m];
            if (!o.ok) {
                ++row.failures;
                continue;
            }
            errors.push_back(o.error_deg);
            all[i] = o.error_deg;
            sum += o.error_deg;
            theta += o.theta_deg;
            rho += o.rho_units;
        }
        row.n = errors.size();
        if (row.n == 0) {
            row.mean_deg = row.median_deg = row.theta_deg = row.rho_e2units = std::numeric_limits<double>::quiet_NaN();
        } else {
            const double n = static_cast<double>(row.n);
            row.mean_deg = sum / n;
            row.median_deg = median_of(errors);
            row.theta_deg = theta / n;
            row.rho_e2units = 100.0 * rho / n;
        }
        report.rows.push_back(row);
        report.errors.push_back(std::move(all));
    }
    return report;
}

std::string format_report(const BenchmarkReport &report) {
    std::string out = kHeader;
    out += '\n';
    char buf[512];
    for (const MethodRow &r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%zu,%.9g,%.9g,%.9g,%.9g,%llu,%zu\n",
                      std::string(method_name(r.method)).c_str(), r.n, r.mean_deg, r.median_deg, r.theta_deg,
                      r.rho_e2units, static_cast<unsigned long long>(r.seed), r.failures);
        out += buf;
    }
    return out;
}

void write_report(const BenchmarkReport &report, const std::filesystem::path &path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw Error(ErrorCode::IoError, "cannot open report for writing: " + path.string());
    }
    os << format_report(report);
    if (!os) {
        throw Error(ErrorCode::IoError, "failed writing report: " + path.string());
    }
}

std::vector<MethodRow> parse_report(std::string_view csv) {
    std::istringstream is{std::string(csv)};
    std::string line;
    if (!std::getline(is, line) || line != kHeader) {
        throw Error(ErrorCode::FormatError, "report header mismatch");
    }
    std::vector<MethodRow> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != 8) {
            throw Error(ErrorCode::FormatError, "report line " + std::to_string(line_no) + ": expected 8 fields");
        }
        MethodRow r;
        r.method = parse_method(fields[0]);
        r.n = parse_uint(fields[1], line_no);
        r.mean_deg = parse_double(fields[2], line_no);
        r.median_deg = parse_double(fields[3], line_no);
        r.theta_deg = parse_double(fields[4], line_no);
        r.rho_e2units = parse_double(fields[5], line_no);
        r.seed = parse_uint(fields[6], line_no);
        r.failures = parse_uint(fields[7], line_no);
        rows.push_back(r);
    }
    return rows;
}

std::vector<MethodRow> read_report(const std::filesystem::path &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw Error(ErrorCode::IoError, "cannot open report: " + path.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_report(ss.str());
}

} // namespace groundplane
