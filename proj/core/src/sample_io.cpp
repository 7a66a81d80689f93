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

#include "groundplane/sample_io.hpp"

#include "groundplane/error.hpp"

#include <json.hpp>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace groundplane {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct FileCloser {
    void operator()(std::FILE *f) const {
        if (f) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string name_of(const fs::path &path) { return path.filename().string(); }

} // namespace

PngImage read_png(const fs::path &path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) {
        throw Error(ErrorCode::FormatError, name_of(path) + ": cannot open");
    }
    png_byte header[8];
    if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
        throw Error(ErrorCode::FormatError, name_of(path) + ": not a PNG file");
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::IoError, "libpng initialization failed");
    }

    PngImage image;
    std::vector<png_byte> buffer;
    std::vector<png_bytep> rows;
    volatile bool ok = false;
    if (setjmp(png_jmpbuf(png)) == 0) {
        png_init_io(png, file.get());
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);
        const int color = png_get_color_type(png, info);
        image.width = static_cast<int>(png_get_image_width(png, info));
        image.height = static_cast<int>(png_get_image_height(png, info));
        image.bit_depth = png_get_bit_depth(png, info);
        if (color == PNG_COLOR_TYPE_GRAY && (image.bit_depth == 8 || image.bit_depth == 16)) {
            image.channels = 1;
        } else if (color == PNG_COLOR_TYPE_RGB && (image.bit_depth == 8 || image.bit_depth == 16)) {
            image.channels = 3;
        } else {
            image.channels = 0;
        }
        if (image.channels != 0) {
            const std::size_t row_bytes = png_get_rowbytes(png, info);
            buffer.resize(row_bytes * image.height);
            rows.resize(image.height);
            for (int r = 0; r < image.height; ++r) {
                rows[r] = buffer.data() + r * row_bytes;
            }
            png_read_image(png, rows.data());
            png_read_end(png, nullptr);
            ok = true;
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (!ok) {
        throw Error(ErrorCode::FormatError, name_of(path) + ": unsupported or corrupt PNG");
    }

    const std::size_t n = static_cast<std::size_t>(image.width) * image.height * image.channels;
    image.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // PNG stores 16-bit samples big-endian.
        image.samples[i] = image.bit_depth == 16
                               ? static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1])
                               : buffer[i];
    }
    return image;
}

void write_png(const fs::path &path, const PngImage &image) {
    const int bytes = image.bit_depth == 16 ? 2 : 1;
    const std::size_t row_bytes = static_cast<std::size_t>(image.width) * image.channels * bytes;
    std::vector<png_byte> buffer(row_bytes * image.height);
    for (std::size_t i = 0; i < image.samples.size(); ++i) {
        if (bytes == 2) {
            buffer[2 * i] = static_cast<png_byte>(image.samples[i] >> 8);
            buffer[2 * i + 1] = static_cast<png_byte>(image.samples[i] & 0xff);
        } else {
            buffer[i] = static_cast<png_byte>(image.samples[i]);
        }
    }
    std::vector<png_bytep> rows(image.height);
    for (int r = 0; r < image.height; ++r) {
        rows[r] = buffer.data() + r * row_bytes;
    }

    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::IoError, "libpng initialization failed");
    }
    volatile bool ok = false;
    if (setjmp(png_jmpbuf(png)) == 0) {
        png_init_io(png, file.get());
        png_set_IHDR(png, info, image.width, image.height, image.bit_depth,
                     image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
        ok = true;
    }
    png_destroy_write_struct(&png, &info);
    if (!ok) {
        throw Error(ErrorCode::IoError, "failed to encode " + path.string());
    }
}

std::uint16_t encode_depth(double meters) {
    if (!(meters > 0.0) || !std::isfinite(meters)) {
        return 0;
    }
    const double v = std::round(meters * kDepthPngScale);
    if (v < 1.0 || v > 65535.0) {
        return 0;
    }
    return static_cast<std::uint16_t>(v);
}

double decode_depth(std::uint16_t value) { return static_cast<double>(value) / kDepthPngScale; }

void write_depth_png(const fs::path &path, const DepthMap &depth) {
    PngImage img{depth.width(), depth.height(), 1, 16, {}};
    img.samples.resize(depth.size());
    for (std::size_t i = 0; i < depth.size(); ++i) {
        img.samples[i] = depth.valid[i] ? encode_depth(depth.depth[i]) : 0;
    }
    write_png(path, img);
}

DepthMap read_depth_png(const fs::path &path) {
    const PngImage img = read_png(path);
    if (img.channels != 1 || img.bit_depth != 16) {
        throw Error(ErrorCode::FormatError, name_of(path) + ": expected 16-bit grayscale");
    }
    DepthMap depth(img.width, img.height);
    for (std::size_t i = 0; i < depth.size(); ++i) {
        if (img.samples[i] != 0) {
            depth.depth[i] = decode_depth(img.samples[i]);
            depth.valid[i] = 1;
        }
    }
    return depth;
}

namespace {

std::uint16_t encode_normal_channel(double c) {
    return static_cast<std::uint16_t>(std::lround(std::clamp(c * 0.5 + 0.5, 0.0, 1.0) * 65535.0));
}

double decode_normal_channel(std::uint16_t v) { return (static_cast<double>(v) / 65535.0 - 0.5) * 2.0; }

double require_number(const json &j, const char *key) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw Error(ErrorCode::FormatError, std::string("manifest field '") + key + "' missing or not a number");
    }
    return j[key].get<double>();
}

int require_int(const json &j, const char *key) {
    if (!j.contains(key) || !j[key].is_number_integer()) {
        throw Error(ErrorCode::FormatError, std::string("manifest field '") + key + "' missing or not an integer");
    }
    return j[key].get<int>();
}

} // namespace

void save_sample(const Sample &sample, const fs::path &dir) {
    sample.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    }
    const int w = sample.intrinsics.width;
    const int h = sample.intrinsics.height;

    write_depth_png(dir / "depth.png", sample.depth);

    PngImage normals{w, h, 3, 16, {}};
    normals.samples.resize(sample.normals.size() * 3, 0);
    for (std::size_t i = 0; i < sample.normals.size(); ++i) {
        if (!sample.normals.valid[i]) {
            continue;
        }
        for (int c = 0; c < 3; ++c) {
            normals.samples[3 * i + c] = encode_normal_channel(sample.normals.normal[i][c]);
        }
    }
    write_png(dir / "normals.png", normals);

    PngImage mask{w, h, 1, 8, {}};
    mask.samples.resize(sample.mask.size());
    for (std::size_t i = 0; i < sample.mask.size(); ++i) {
        mask.samples[i] = sample.mask.ground[i] ? 255 : 0;
    }
    write_png(dir / "mask.png", mask);

    const CameraIntrinsics &k = sample.intrinsics;
    json manifest = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
    manifest["gt_normal"] = sample.gt_normal
                                ? json::array({sample.gt_normal->x(), sample.gt_normal->y(), sample.gt_normal->z()})
                                : json(nullptr);
    manifest["gt_height"] = sample.gt_height ? json(*sample.gt_height) : json(nullptr);

    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + (dir / "manifest.json").string());
    }
}

Sample load_sample(const fs::path &dir) {
    if (!fs::is_directory(dir)) {
        throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
    }
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::FormatError, "manifest: cannot open " + manifest_path.string());
    }
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception &e) {
        throw Error(ErrorCode::FormatError, std::string("manifest: ") + e.what());
    }
    if (!manifest.is_object()) {
        throw Error(ErrorCode::FormatError, "manifest: expected a JSON object");
    }

    Sample s;
    CameraIntrinsics &k = s.intrinsics;
    k.fx = require_number(manifest, "fx");
    k.fy = require_number(manifest, "fy");
    k.cx = require_number(manifest, "cx");
    k.cy = require_number(manifest, "cy");
    k.width = require_int(manifest, "width");
    k.height = require_int(manifest, "height");
    try {
        k.validate();
    } catch (const Error &e) {
        throw Error(ErrorCode::FormatError, std::string("manifest intrinsics: ") + e.what());
    }
    if (manifest.contains("gt_normal") && !manifest["gt_normal"].is_null()) {
        const json &g = manifest["gt_normal"];
        if (!g.is_array() || g.size() != 3 || !g[0].is_number() || !g[1].is_number() || !g[2].is_number()) {
            throw Error(ErrorCode::FormatError, "manifest field 'gt_normal' must be an array of 3 numbers");
        }
        try {
            s.gt_normal = UnitNormal(g[0].get<double>(), g[1].get<double>(), g[2].get<double>());
        } catch (const Error &) {
            throw Error(ErrorCode::FormatError, "manifest field 'gt_normal' is a zero vector");
        }
    }
    if (manifest.contains("gt_height") && !manifest["gt_height"].is_null()) {
        s.gt_height = require_number(manifest, "gt_height");
    }

    s.depth = read_depth_png(dir / "depth.png");
    if (!s.depth.depth.same_shape(k.width, k.height)) {
        throw Error(ErrorCode::FormatError, "depth.png: size disagrees with manifest");
    }

    const PngImage normals = read_png(dir / "normals.png");
    if (normals.channels != 3 || normals.bit_depth != 16) {
        throw Error(ErrorCode::FormatError, "normals.png: expected 16-bit RGB");
    }
    if (normals.width != k.width || normals.height != k.height) {
        throw Error(ErrorCode::FormatError, "normals.png: size disagrees with manifest");
    }
    s.normals = NormalMap(k.width, k.height);
    for (std::size_t i = 0; i < s.normals.size(); ++i) {
        const std::uint16_t r = normals.samples[3 * i];
        const std::uint16_t g = normals.samples[3 * i + 1];
        const std::uint16_t b = normals.samples[3 * i + 2];
        if (r == 0 && g == 0 && b == 0) {
            continue;
        }
        const Eigen::Vector3d n(decode_normal_channel(r), decode_normal_channel(g), decode_normal_channel(b));
        if (n.norm() < 0.5) {
            throw Error(ErrorCode::FormatError, "normals.png: pixel does not decode to a unit vector");
        }
        s.normals.normal[i] = n.normalized();
        s.normals.valid[i] = 1;
    }

    const PngImage mask = read_png(dir / "mask.png");
    if (mask.channels != 1 || mask.bit_depth != 8) {
        throw Error(ErrorCode::FormatError, "mask.png: expected 8-bit grayscale");
    }
    if (mask.width != k.width || mask.height != k.height) {
        throw Error(ErrorCode::FormatError, "mask.png: size disagrees with manifest");
    }
    s.mask = GroundMask(k.width, k.height);
    for (std::size_t i = 0; i < s.mask.size(); ++i) {
        if (mask.samples[i] != 0 && mask.samples[i] != 255) {
            throw Error(ErrorCode::FormatError, "mask.png: values must be 0 or 255");
        }
        s.mask.ground[i] = mask.samples[i] == 255 ? 1 : 0;
    }
    return s;
}

} // namespace groundplane
