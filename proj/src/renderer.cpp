// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/renderer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace strf {

template <class Real>
std::vector<Real> alphas(const std::vector<Real>& sigma, const std::vector<Real>& delta) {
    if (sigma.size() != delta.size()) throw std::invalid_argument("alphas: shape mismatch");
    std::vector<Real> out(sigma.size());
    for (size_t i = 0; i < sigma.size(); ++i) {
        if (sigma[i] < Real(0)) throw std::invalid_argument("alphas: negative density");
        out[i] = Real(1) - Real(std::exp(-double(sigma[i]) * double(delta[i])));
    }
    return out;
}

template <class Real>
std::vector<Real> transmittance(const std::vector<Real>& alpha) {
    std::vector<Real> out(alpha.size());
    Real running = Real(1);
    for (size_t i = 0; i < alpha.size(); ++i) {
        out[i] = running;
        running *= Real(1) - alpha[i];
    }
    return out;
}

template <class Real>
RenderedRay render_ray(const std::vector<std::array<Real, 3>>& colors,
                       const std::vector<Real>& alpha, const std::vector<Real>& tr,
                       const std::vector<Real>& t, const Vec3& background) {
    RenderedRay out;
    if (colors.empty()) {
        out.rgb = background;
        out.height = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    if (colors.size() != alpha.size() || colors.size() != tr.size() || colors.size() != t.size())
        throw std::invalid_argument("render_ray: shape mismatch");
    double rgb[3] = {0, 0, 0};
    double wsum = 0, wt = 0;
    for (size_t i = 0; i < colors.size(); ++i) {
        const double w = double(tr[i]) * double(alpha[i]);
        for (int c = 0; c < 3; ++c) rgb[c] += w * double(colors[i][c]);
        wsum += w;
        wt += w * double(t[i]);
    }
    out.rgb = {rgb[0], rgb[1], rgb[2]};
    out.opacity_sum = wsum;
    out.height = wt / std::max(wsum, 1e-12);
    return out;
}

int camera_width(const CameraVariant& cam) {
    return std::visit([](const auto& c) { return c.width; }, cam);
}

int camera_height(const CameraVariant& cam) {
    return std::visit([](const auto& c) { return c.height; }, cam);
}

Ray camera_ray(const CameraVariant& cam, int row, int col, const SceneBounds& bounds) {
    if (const auto* pin = std::get_if<PinholeCamera>(&cam)) return pin->pixel_ray(row, col);
    const auto& rpc = std::get<RpcCamera>(cam);
    // RPC rays pass through the pixel center, matching the pinhole convention.
    const auto res = rpc_ray(rpc, row + 0.5, col + 0.5, bounds);
    if (!res.ok) throw std::runtime_error("camera_ray: " + res.error);
    return res.ray;
}

template <class Real>
RenderResult render_image(const Model<Real>& model, const CameraVariant& cam,
                          const SceneBounds& bounds, const RenderOptions& opts, uint64_t seed) {
    const int W = camera_width(cam);
    const int H = camera_height(cam);
    RenderResult out;
    out.rgb = Image(W, H);
    out.altitude.assign(size_t(W) * H, std::numeric_limits<double>::quiet_NaN());
    out.opacity.assign(size_t(W) * H, 0.0);

    RayTape<Real> tape;
    tape.reserve(model, opts.n_samples, opts.max_shaded);

    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            const Ray ray = camera_ray(cam, r, c, bounds);
            Rng rng(Rng::mix(seed, uint64_t(r) * 1280635 + c), 7);
            const RaySampleSet samples =
                sample_along_ray(ray, bounds, opts.n_samples, opts.stratified, rng);
            float* px = out.rgb.px(r, c);
            const size_t idx = size_t(r) * W + c;
            if (!model_ray_forward(model, samples, ray.dir, opts, tape)) {
                px[0] = float(opts.background.x);
                px[1] = float(opts.background.y);
                px[2] = float(opts.background.z);
                continue;
            }
            for (int ch = 0; ch < 3; ++ch) px[ch] = float(tape.rgb[ch]);
            out.altitude[idx] = double(tape.height);
            out.opacity[idx] = double(tape.wsum);
        }
    return out;
}

Dsm dsm_from_altitude(const RenderResult& rendered, const CameraVariant& cam,
                      const SceneBounds& bounds, double cellsize, double opacity_threshold) {
    if (!(cellsize > 0)) throw std::invalid_argument("dsm_from_altitude: cellsize must be > 0");
    Dsm dsm;
    dsm.cellsize = cellsize;
    dsm.xll = bounds.min.x;
    dsm.yll = bounds.min.y;
    dsm.ncols = std::max(1, int(std::ceil((bounds.max.x - bounds.min.x) / cellsize)));
    dsm.nrows = std::max(1, int(std::ceil((bounds.max.y - bounds.min.y) / cellsize)));
    dsm.values.assign(size_t(dsm.ncols) * dsm.nrows, 0.0);
    std::vector<int> hits(dsm.values.size(), 0);

    const int W = camera_width(cam);
    const int H = camera_height(cam);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            const size_t idx = size_t(r) * W + c;
            const double h = rendered.altitude[idx];
            if (!(rendered.opacity[idx] >= opacity_threshold) || !std::isfinite(h)) continue;
            const Ray ray = camera_ray(cam, r, c, bounds);
            const Vec3 p = ray.origin + h * ray.dir;
            const int cc = int(std::floor((p.x - dsm.xll) / cellsize));
            const int rr_from_bottom = int(std::floor((p.y - dsm.yll) / cellsize));
            if (cc < 0 || cc >= dsm.ncols || rr_from_bottom < 0 || rr_from_bottom >= dsm.nrows)
                continue;
            // Row 0 is the top row (max y), ESRI convention.
            const int rr = dsm.nrows - 1 - rr_from_bottom;
            const size_t cell = size_t(rr) * dsm.ncols + cc;
            dsm.values[cell] += p.z;
            hits[cell] += 1;
        }
    for (size_t i = 0; i < dsm.values.size(); ++i)
        dsm.values[i] = hits[i] > 0 ? dsm.values[i] / hits[i] : dsm.nodata;
    return dsm;
}

void save_dsm_ascii(const Dsm& dsm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dsm: cannot write " + path);
    out.precision(10);
    out << "ncols " << dsm.ncols << "\n";
    out << "nrows " << dsm.nrows << "\n";
    out << "xllcorner " << dsm.xll << "\n";
    out << "yllcorner " << dsm.yll << "\n";
    out << "cellsize " << dsm.cellsize << "\n";
    out << "NODATA_value " << dsm.nodata << "\n";
    for (int r = 0; r < dsm.nrows; ++r) {
        for (int c = 0; c < dsm.ncols; ++c) {
            if (c) out << ' ';
            out << dsm.values[size_t(r) * dsm.ncols + c];
        }
        out << '\n';
    }
}

Dsm load_dsm_ascii(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("dsm: cannot open " + path);
    Dsm dsm;
    std::string key;
    for (int i = 0; i < 6; ++i) {
        in >> key;
        if (key == "ncols") in >> dsm.ncols;
        else if (key == "nrows") in >> dsm.nrows;
        else if (key == "xllcorner") in >> dsm.xll;
        else if (key == "yllcorner") in >> dsm.yll;
        else if (key == "cellsize") in >> dsm.cellsize;
        else if (key == "NODATA_value") in >> dsm.nodata;
        else throw std::runtime_error("dsm: unexpected header key " + key);
    }
    dsm.values.resize(size_t(dsm.ncols) * dsm.nrows);
    for (auto& v : dsm.values)
        if (!(in >> v)) throw std::runtime_error("dsm: truncated grid in " + path);
    return dsm;
}

#define STRF_INSTANTIATE(Real)                                                                    \
    template std::vector<Real> alphas<Real>(const std::vector<Real>&, const std::vector<Real>&); \
    template std::vector<Real> transmittance<Real>(const std::vector<Real>&);                     \
    template RenderedRay render_ray<Real>(const std::vector<std::array<Real, 3>>&,                \
                                          const std::vector<Real>&, const std::vector<Real>&,    \
                                          const std::vector<Real>&, const Vec3&);                 \
    template RenderResult render_image<Real>(const Model<Real>&, const CameraVariant&,            \
                                             const SceneBounds&, const RenderOptions&, uint64_t);

STRF_INSTANTIATE(float)
STRF_INSTANTIATE(double)
#undef STRF_INSTANTIATE

}  // namespace strf
