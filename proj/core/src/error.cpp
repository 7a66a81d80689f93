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

namespace groundplane {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::DegenerateNormal: return "DegenerateNormal";
    case ErrorCode::HorizonAtInfinity: return "HorizonAtInfinity";
    case ErrorCode::EmptyGround: return "EmptyGround";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::AllDegenerate: return "AllDegenerate";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::OppositeNormals: return "OppositeNormals";
    case ErrorCode::ProbOutOfRange: return "ProbOutOfRange";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::CropTooSmall: return "CropTooSmall";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string &what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

} // namespace groundplane
