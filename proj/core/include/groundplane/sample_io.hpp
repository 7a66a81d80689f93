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

#include "groundplane/maps.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace groundplane {

// On-disk sample layout (one directory per sample):
//   depth.png     16-bit gray, meters = value / 256, 0 = invalid
//   normals.png   16-bit RGB, channel = round((n * 0.5 + 0.5) * 65535), all-zero = invalid
//   mask.png      8-bit gray, 255 = ground
//   manifest.json {fx, fy, cx, cy, width, height, gt_normal, gt_height}
inline constexpr double kDepthPngScale = 256.0;

struct PngImage {
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 = gray, 3 = RGB
    int bit_depth = 8; // 8 or 16
    std::vector<std::uint16_t> samples; // row-major, interleaved channels
};

PngImage read_png(const std::filesystem::path &path);
void write_png(const std::filesystem::path &path, const PngImage &image);

std::uint16_t encode_depth(double meters);
double decode_depth(std::uint16_t value);

// Depth outside (0, 65535/256] m is written as 0 and reads back invalid.
void write_depth_png(const std::filesystem::path &path, const DepthMap &depth);
DepthMap read_depth_png(const std::filesystem::path &path);

void save_sample(const Sample &sample, const std::filesystem::path &dir);

// Throws FormatError naming the offending file or manifest field, IoError
// when the directory cannot be read.
Sample load_sample(const std::filesystem::path &dir);

} // namespace groundplane
