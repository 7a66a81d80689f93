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

#include "groundplane/maps.hpp"

#include "groundplane/error.hpp"

#include <algorithm>
#include <sstream>

namespace groundplane {

namespace {

std::size_t count_nonzero(const std::vector<std::uint8_t> &v) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](std::uint8_t x) { return x != 0; }));
}

} // namespace

std::size_t DepthMap::valid_count() const { return count_nonzero(valid.data()); }
std::size_t NormalMap::valid_count() const { return count_nonzero(valid.data()); }
std::size_t GroundMask::count() const { return count_nonzero(ground.data()); }

void require_same_shape(int w0, int h0, int w1, int h1, const char *what) {
    if (w0 != w1 || h0 != h1) {
        std::ostringstream msg;
        msg << what << ": " << w0 << "x" << h0 << " vs " << w1 << "x" << h1;
        throw Error(ErrorCode::ShapeMismatch, msg.str());
    }
}

void Sample::validate() const {
    const int w = intrinsics.width;
    const int h = intrinsics.height;
    require_same_shape(depth.width(), depth.height(), w, h, "depth map vs intrinsics");
    require_same_shape(depth.valid.width(), depth.valid.height(), w, h, "depth validity vs intrinsics");
    require_same_shape(normals.width(), normals.height(), w, h, "normal map vs intrinsics");
    require_same_shape(normals.valid.width(), normals.valid.height(), w, h, "normal validity vs intrinsics");
    require_same_shape(mask.width(), mask.height(), w, h, "ground mask vs intrinsics");
}

} // namespace groundplane
