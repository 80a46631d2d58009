// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <variant>
#include <vector>

#include "strf/image.hpp"
#include "strf/model.hpp"

namespace strf {

// alpha_i = 1 - exp(-sigma_i * delta_i). Throws on negative sigma.
template <class Real>
std::vector<Real> alphas(const std::vector<Real>& sigma, const std::vector<Real>& delta);

// Exclusive prefix product of (1 - alpha), Tr_1 = 1.
template <class Real>
std::vector<Real> transmittance(const std::vector<Real>& alpha);

struct RenderedRay {
    Vec3 rgb{0, 0, 0};
    double height = 0.0;  // NaN for empty sample sets
    double opacity_sum = 0.0;
};

// Compositing of per-sample colors: rgb = sum w_i c_i with w = Tr * alpha,
// height = sum w t / max(sum w, eps). Empty input renders the background.
template <class Real>
RenderedRay render_ray(const std::vector<std::array<Real, 3>>& colors,
                       const std::vector<Real>& alpha, const std::vector<Real>& tr,
                       const std::vector<Real>& t, const Vec3& background = {0, 0, 0});

using CameraVariant = std::variant<PinholeCamera, RpcCamera>;

int camera_width(const CameraVariant& cam);
int camera_height(const CameraVariant& cam);

// Ray through a pixel center for either camera model. RPC rays require the
// bounds (altitude range); failures throw.
Ray camera_ray(const CameraVariant& cam, int row, int col, const SceneBounds& bounds);

struct RenderResult {
    Image rgb;
    std::vector<double> altitude;  // expected ray distance; NaN where escaped
    std::vector<double> opacity;   // sum of render weights
};

// Full-frame render; deterministic when opts.stratified is false (and for a
// fixed seed otherwise).
template <class Real>
RenderResult render_image(const Model<Real>& model, const CameraVariant& cam,
                          const SceneBounds& bounds, const RenderOptions& opts,
                          uint64_t seed = 0);

// Regular-grid surface model splatted from per-pixel ray termination points.
struct Dsm {
    int ncols = 0, nrows = 0;
    double xll = 0, yll = 0;  // lower-left corner
    double cellsize = 1.0;
    double nodata = -9999.0;
    std::vector<double> values;  // row-major, row 0 = top (max y)

    bool valid(int r, int c) const { return values[size_t(r) * ncols + c] != nodata; }
    double at(int r, int c) const { return values[size_t(r) * ncols + c]; }
};

// Per-pixel world altitude o_z + h * d_z for pixels whose opacity clears the
// threshold, splatted to the nearest XY cell; collisions average; empty cells
// carry nodata.
Dsm dsm_from_altitude(const RenderResult& rendered, const CameraVariant& cam,
                      const SceneBounds& bounds, double cellsize, double opacity_threshold);

void save_dsm_ascii(const Dsm& dsm, const std::string& path);
Dsm load_dsm_ascii(const std::string& path);

}  // namespace strf
