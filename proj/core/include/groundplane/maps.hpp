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

#include "groundplane/camera.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace groundplane {

// Row-major height x width image of T.
template <typename T> class Grid {
  public:
    Grid() = default;
    Grid(int width, int height, const T &fill = T())
        : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    std::size_t index(int col, int row) const {
        return static_cast<std::size_t>(row) * width_ + col;
    }

    T &operator()(int col, int row) { return data_[index(col, row)]; }
    const T &operator()(int col, int row) const { return data_[index(col, row)]; }
    T &operator[](std::size_t i) { return data_[i]; }
    const T &operator[](std::size_t i) const { return data_[i]; }

    std::vector<T> &data() { return data_; }
    const std::vector<T> &data() const { return data_; }

    bool same_shape(int width, int height) const { return width_ == width && height_ == height; }

    bool operator==(const Grid &) const = default;

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

// Per-pixel depth in meters; valid entries are finite and positive.
struct DepthMap {
    Grid<double> depth;
    Grid<std::uint8_t> valid;

    DepthMap() = default;
    DepthMap(int width, int height) : depth(width, height, 0.0), valid(width, height, 0) {}

    int width() const { return depth.width(); }
    int height() const { return depth.height(); }
    std::size_t size() const { return depth.size(); }
    std::size_t valid_count() const;

    bool operator==(const DepthMap &) const = default;
};

// Per-pixel surface normals, stored as predicted (not canonicalized).
struct NormalMap {
    Grid<Eigen::Vector3d> normal;
    Grid<std::uint8_t> valid;

    NormalMap() = default;
    NormalMap(int width, int height)
        : normal(width, height, Eigen::Vector3d::Zero()), valid(width, height, 0) {}

    int width() const { return normal.width(); }
    int height() const { return normal.height(); }
    std::size_t size() const { return normal.size(); }
    std::size_t valid_count() const;

    bool operator==(const NormalMap &) const = default;
};

// Binary ground segmentation, 1 = ground.
struct GroundMask {
    Grid<std::uint8_t> ground;

    GroundMask() = default;
    GroundMask(int width, int height, std::uint8_t fill = 0) : ground(width, height, fill) {}

    int width() const { return ground.width(); }
    int height() const { return ground.height(); }
    std::size_t size() const { return ground.size(); }
    std::size_t count() const;

    bool operator==(const GroundMask &) const = default;
};

struct Sample {
    DepthMap depth;
    NormalMap normals;
    GroundMask mask;
    CameraIntrinsics intrinsics;
    std::optional<UnitNormal> gt_normal;
    std::optional<double> gt_height;

    // Throws ShapeMismatch when the maps disagree with each other or with the
    // intrinsics' image size.
    void validate() const;

    bool operator==(const Sample &) const = default;
};

void require_same_shape(int w0, int h0, int w1, int h1, const char *what);

} // namespace groundplane
