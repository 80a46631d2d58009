// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace strf {

// Planar-free RGB float image, values nominally in [0,1] (clamped at write).
struct Image {
    int width = 0, height = 0;
    std::vector<float> data;  // 3 * width * height, row-major RGB

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(size_t(3) * w * h, 0.f) {}

    float* px(int row, int col) { return data.data() + 3 * (size_t(row) * width + col); }
    const float* px(int row, int col) const {
        return data.data() + 3 * (size_t(row) * width + col);
    }
};

// 8-bit binary PPM (P6). Round trip is bit-exact for 8-bit content; float
// values map linearly, u8 = round(255 * clamp(v, 0, 1)).
Image load_ppm(const std::string& path);
void save_ppm(const Image& img, const std::string& path);

// 16-bit binary PGM (P5) for altitude maps; values scaled into [lo, hi].
void save_pgm16(const std::vector<double>& values, int width, int height, double lo, double hi,
                const std::string& path);

// 8-bit binary PGM (P5), used for masks.
void save_pgm8(const std::vector<uint8_t>& values, int width, int height,
               const std::string& path);
std::vector<uint8_t> load_pgm8(const std::string& path, int* width, int* height);

}  // namespace strf
