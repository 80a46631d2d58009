// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "strf/rng.hpp"
#include "strf/vec.hpp"

namespace strf {

// Axis-aligned scene box; Z is the altitude axis. Field sampling happens in
// bounds-normalized [0,1]^3 coordinates.
struct SceneBounds {
    Vec3 min{0, 0, 0};
    Vec3 max{1, 1, 1};

    void validate() const;  // throws std::invalid_argument on min >= max

    Vec3 extent() const { return max - min; }
    bool contains(const Vec3& p) const;

    // Affine map into [0,1]^3, clamped; *clamped set when p was outside.
    Vec3 normalize(const Vec3& p, bool* clamped = nullptr) const;
    Vec3 denormalize(const Vec3& q) const;

    // Slab intersection of o + t*d against the box. Returns false on a miss;
    // on a hit t0 <= t1 and t1 >= 0 (t0 clamped up to 0 for interior origins).
    bool ray_range(const Vec3& o, const Vec3& d, double* t0, double* t1) const;
};

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length
    int row = 0;
    int col = 0;
};

// Stratified (or midpoint) samples along one ray inside the bounds.
struct RaySampleSet {
    bool miss = false;
    double t_min = 0.0;
    double t_max = 0.0;
    std::vector<double> t;        // ascending sample distances
    std::vector<double> delta;    // gaps; last entry = stratum width
    std::vector<Vec3> positions;  // normalized into [0,1]^3
};

struct PinholeCamera {
    double fx = 1.0, fy = 1.0;
    double cx = 0.0, cy = 0.0;
    Mat3 rot;   // world -> camera
    Vec3 trans; // x_cam = rot * x_world + trans
    int width = 0, height = 0;

    void validate() const;  // orthonormality within 1e-9, det = +1

    Vec3 center() const { return -rot.transposed_mul(trans); }

    // Projects a world point; returns (row, col, depth). depth <= 0 means the
    // point is behind the camera.
    std::array<double, 3> project(const Vec3& p) const;

    // Ray through the center of pixel (row, col); pixel centers at +0.5.
    Ray pixel_ray(int row, int col) const;
};

// Rational polynomial camera in RPB form: cubic numerator/denominator pairs
// over normalized (lat, lon, height), 20 coefficients each in the standard
// term order. Here ground coordinates are scene (x, y, z) = (lat, lon, height).
struct RpcCamera {
    std::array<double, 20> line_num{}, line_den{}, samp_num{}, samp_den{};
    double lat_off = 0, lat_scale = 1;
    double lon_off = 0, lon_scale = 1;
    double height_off = 0, height_scale = 1;
    double line_off = 0, line_scale = 1;
    double samp_off = 0, samp_scale = 1;
    int width = 0, height = 0;

    void validate() const;  // nonzero denominator constants, positive scales

    // Forward model: ground point -> (row, col).
    std::array<double, 2> project(const Vec3& ground) const;
};

struct DepthPoint {
    int view = 0;
    int row = 0;
    int col = 0;
    double distance = 0.0;  // ||X(r) - o(r)||, scene units
    double weight = 1.0;    // >= 0, from reprojection error
};

struct RayBatch {
    std::vector<Ray> rays;
};

// Pinhole ray generation; throws std::out_of_range naming the first offending
// pixel index when a pixel lies outside the image.
RayBatch generate_rays_pinhole(const PinholeCamera& cam,
                               const std::vector<std::pair<int, int>>& pixels);

struct RpcLocalizeResult {
    bool ok = false;
    Vec3 point;           // valid when ok
    double residual_px = 0.0;
    int iterations = 0;
};

// Inverse model at fixed altitude via damped Newton on the two normalized
// ground coordinates (20-iteration cap, 1e-10 step floor). ok requires the
// reprojected pixel to land within 1e-4 px.
RpcLocalizeResult rpc_localize(const RpcCamera& cam, double row, double col, double altitude);

struct RpcRayResult {
    bool ok = false;
    Ray ray;
    std::string error;
};

// Ray construction for RPC cameras: localize at the top and bottom of the
// altitude range and connect. Degenerate altitude extent or localization
// failure is reported, not thrown.
RpcRayResult rpc_ray(const RpcCamera& cam, double row, double col, const SceneBounds& bounds);

// N_s samples in [t_min, t_max]: deterministic midpoints, or one uniform
// jitter per stratum when stratified. Returns miss=true when the ray does not
// intersect the bounds.
RaySampleSet sample_along_ray(const Ray& ray, const SceneBounds& bounds, int n_samples,
                              bool stratified, Rng& rng);

// RPB-style text IO: `KEY = value` lines (LINE_NUM_COEFF_1..20 etc).
RpcCamera load_rpc(const std::string& path);
void save_rpc(const RpcCamera& cam, const std::string& path);

// Pinhole text IO, `KEY = value` lines.
PinholeCamera load_pinhole(const std::string& path);
void save_pinhole(const PinholeCamera& cam, const std::string& path);

}  // namespace strf
