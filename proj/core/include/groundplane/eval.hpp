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

#include "groundplane/augment.hpp"
#include "groundplane/camera.hpp"
#include "groundplane/scene.hpp"
#include "groundplane/streams.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace groundplane {

// Degrees; symmetric, in [0, 180].
double angular_error_deg(const UnitNormal &est, const UnitNormal &gt);

enum class Method { LeastSquares, Dsac, NormalStream, Fused };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
std::vector<Method> all_methods();

struct BenchmarkConfig {
    // Sample-set directory of numbered subdirectories; the generator is used when empty.
    std::optional<std::filesystem::path> dataset;
    SceneGeneratorConfig generator;
    std::vector<Method> methods = all_methods();
    NoiseSpec noise;
    AugmentLimits limits;
    DsacConfig dsac;
    double max_depth = kDefaultMaxDepth;
    int n = 100;
    std::uint64_t seed = 0;
    int jobs = 1;

    void validate() const;
};

struct MethodRow {
    Method method = Method::LeastSquares;
    std::size_t n = 0;        // successful samples
    std::size_t failures = 0; // samples where this method raised
    double mean_deg = 0.0;
    double median_deg = 0.0;
    double theta_deg = 0.0;   // mean horizon angle error
    double rho_e2units = 0.0; // mean horizon offset error, 1e-2 image heights
    std::uint64_t seed = 0;

    bool operator==(const MethodRow &) const = default;
};

struct BenchmarkReport {
    std::vector<MethodRow> rows;
    std::string config; // human-readable echo, not part of the CSV
    // Per-method sample errors in degrees (NaN for failures), indexed like rows.
    std::vector<std::vector<double>> errors;
};

BenchmarkReport run_benchmark(const BenchmarkConfig &config);

// CSV: method,n,mean_deg,median_deg,theta_deg,rho_e2units,seed,failures
// Values at 9 significant digits, LF line endings.
std::string format_report(const BenchmarkReport &report);
void write_report(const BenchmarkReport &report, const std::filesystem::path &path);
std::vector<MethodRow> parse_report(std::string_view csv);
std::vector<MethodRow> read_report(const std::filesystem::path &path);

} // namespace groundplane
