// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace strf {

namespace {

// Reads one whitespace/comment-delimited token from a PNM header.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw std::runtime_error("ppm: truncated header");
    return tok;
}

}  // namespace

Image load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("ppm: cannot open " + path);
    if (next_token(in) != "P6") throw std::runtime_error("ppm: not a P6 file: " + path);
    const int w = std::stoi(next_token(in));
    const int h = std::stoi(next_token(in));
    const int maxval = std::stoi(next_token(in));
    if (w <= 0 || h <= 0 || maxval != 255)
        throw std::runtime_error("ppm: unsupported header in " + path);
    std::vector<unsigned char> raw(size_t(3) * w * h);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (size_t(in.gcount()) != raw.size()) throw std::runtime_error("ppm: truncated payload");
    Image img(w, h);
    for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0f;
    return img;
}

void save_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("ppm: cannot write " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) {
        const float v = std::clamp(img.data[i], 0.0f, 1.0f);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
}

void save_pgm8(const std::vector<uint8_t>& values, int width, int height,
               const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pgm: cannot write " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(values.data()), std::streamsize(values.size()));
}

std::vector<uint8_t> load_pgm8(const std::string& path, int* width, int* height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pgm: cannot open " + path);
    if (next_token(in) != "P5") throw std::runtime_error("pgm: not a P5 file: " + path);
    *width = std::stoi(next_token(in));
    *height = std::stoi(next_token(in));
    const int maxval = std::stoi(next_token(in));
    if (maxval != 255) throw std::runtime_error("pgm: unsupported maxval in " + path);
    std::vector<uint8_t> raw(size_t(*width) * *height);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (size_t(in.gcount()) != raw.size()) throw std::runtime_error("pgm: truncated payload");
    return raw;
}

void save_pgm16(const std::vector<double>& values, int width, int height, double lo, double hi,
                const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pgm: cannot write " + path);
    out << "P5\n" << width << " " << height << "\n65535\n";
    const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
    std::vector<unsigned char> raw(size_t(2) * width * height);
    for (size_t i = 0; i < values.size(); ++i) {
        double v = values[i];
        unsigned u = 0;
        if (std::isfinite(v)) {
            v = std::clamp((v - lo) * scale, 0.0, 65535.0);
            u = static_cast<unsigned>(std::lround(v));
        }
        raw[2 * i] = static_cast<unsigned char>(u >> 8);      // big-endian per PGM
        raw[2 * i + 1] = static_cast<unsigned char>(u & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
}

}  // namespace strf
