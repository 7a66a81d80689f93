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

#include "groundplane/losses.hpp"
#include "groundplane/maps.hpp"

#include <cstddef>
#include <cstdint>

namespace groundplane {

struct GradCheckOptions {
    double step = 3e-7;            // central-difference step, scaled by max(1, |x|)
    double small_gradient = 1e-6;  // below this magnitude the absolute error is judged instead
    double abs_tolerance = 1e-8;   // absolute error allowed for small entries
    double rel_tolerance = 1e-4;   // the scale the reported error is expressed in
};

struct GradCheckResult {
    // |a - f| / max(|a|, |f|) for entries at least small_gradient in magnitude;
    // |a - f| * rel_tolerance / abs_tolerance otherwise, so that a single
    // threshold of rel_tolerance applies to both.
    double max_rel_error = 0.0;
    std::size_t coordinates = 0;
    double max_abs_grad = 0.0;
};

// Central finite differences of pipeline_loss over every valid depth entry and
// every normal component of `pred`, against its analytic gradients.
GradCheckResult check_gradients(const Sample &pred, const Sample *gt, const PipelineLossOptions &options,
                                const GradCheckOptions &fd = {});

struct GradCheckPair {
    Sample pred;
    Sample gt;
};

// Ground-only size x size render with the camera pitched down 15-25 degrees,
// and a prediction carrying 1% depth noise and 2 degrees of normal jitter.
GradCheckPair make_gradcheck_pair(std::uint64_t seed, int size = 16);

struct GradCheckSuiteResult {
    double max_rel_error_ls = 0.0;
    double max_rel_error_dsac = 0.0;
    std::size_t samples = 0;
    std::size_t coordinates = 0;

    double max_rel_error() const { return max_rel_error_ls > max_rel_error_dsac ? max_rel_error_ls : max_rel_error_dsac; }
};

// Checks both plane-fit paths on `samples` random pairs.
GradCheckSuiteResult run_gradcheck_suite(std::size_t samples, std::uint64_t seed, int size = 16,
                                         const GradCheckOptions &fd = {});

} // namespace groundplane
