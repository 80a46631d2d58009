// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "strf/image.hpp"
#include "strf/renderer.hpp"

namespace strf {

struct SceneParams {
    SceneBounds bounds{{0, 0, 0}, {8, 8, 2}};
    double mean_altitude = 1.0;
    double roughness = 0.5;   // 0 = flat plane at the mean altitude
    int octaves = 4;
    double k_specular = 0.3;  // Phong lobe strength
    double shininess = 24.0;
    double ambient = 0.12;
    Vec3 sun{-0.3, 0.25, 0.9};  // normalized on construction
};

// Analytic terrain + shading: a seeded sum of directional cosine waves (exact
// gradients, bounded extrema) with a procedural albedo and a Phong specular
// term. This is the ground-truth side of the pipeline, so everything here is
// closed-form and double precision.
struct SyntheticScene {
    uint64_t seed = 0;
    SceneBounds bounds;
    double mean_altitude = 1.0;
    double k_specular = 0.3;
    double shininess = 24.0;
    double ambient = 0.12;
    Vec3 sun{0, 0, 1};

    struct Wave {
        double kx, ky, phase, amp;
    };
    std::vector<Wave> waves;

    struct AlbedoWave {
        double kx, ky, phase, amp;
    };
    AlbedoWave albedo_waves[3];

    double height(double x, double y) const;
    Vec3 height_gradient(double x, double y) const;  // (dz/dx, dz/dy, 0)
    Vec3 surface_normal(double x, double y) const;
    Vec3 albedo(double x, double y) const;  // in [0.05, 0.95]

    // tint * (albedo * max(0, n.s) + k_s * max(0, r.v)^p + ambient), clamped
    // to [0,1] per channel. view points from the surface toward the camera.
    Vec3 shade(const Vec3& p, const Vec3& normal, const Vec3& view, const Vec3& tint) const;
};

SyntheticScene make_scene(uint64_t seed, const SceneParams& params);

struct OracleRender {
    Image rgb;
    std::vector<double> depth;  // first-hit distance; NaN where the ray misses
};

// Bisection-refined heightfield intersection (1e-4 tolerance) with analytic
// normals and closed-form shading.
OracleRender oracle_render(const SyntheticScene& scene, const CameraVariant& cam,
                           const Vec3& tint = {1, 1, 1});

struct TransientMask {
    std::vector<uint8_t> mask;  // 1 where perturbed
    int count = 0;              // rectangles actually placed
};

// Paints k small (3..9 px) high-contrast non-overlapping rectangles.
TransientMask inject_transients(Image& img, uint64_t seed, int k);

// Samples true first-hit distances (plus Gaussian noise sigma_d) at random
// pixels; weights w = 1 / (1 + |e|) with e a simulated reprojection error.
std::vector<DepthPoint> sparse_depth_points(const SyntheticScene& scene,
                                            const std::vector<CameraVariant>& cams, int count,
                                            double noise_sigma, uint64_t seed);

struct View {
    CameraVariant camera;
    Image gt;
};

struct Dataset {
    SceneBounds bounds;
    std::vector<View> views;
    std::set<int> test_views;
    std::vector<DepthPoint> depth_points;
    std::map<int64_t, std::pair<double, double>> depth_lookup;  // key from pixel_key
    double dsm_cellsize = 0.125;
    std::string true_dsm_path;  // empty when absent

    static int64_t pixel_key(int view, int row, int col) {
        return (int64_t(view) << 40) | (int64_t(row) << 20) | int64_t(col);
    }
    void index_depth_points();
    std::vector<int> train_view_ids() const;
    // (distance, weight) for a supervised pixel.
    std::optional<std::pair<double, double>> depth_at(int view, int row, int col) const;
};

struct SynthParams {
    SceneParams scene;
    uint64_t seed = 42;
    int n_views = 20;
    int image_size = 64;
    int test_views = 2;       // held out from the end of the view list
    std::string cam_kind = "pinhole";  // pinhole | rpc
    int transients_per_view = 0;
    bool tints = false;
    double tint_strength = 0.25;
    int depth_points = 512;
    double depth_noise = 0.0;
    double dsm_cellsize = 0.125;
};

// Generates the dataset directory: scene.txt, view_%03d.ppm, view_%03d.cam
// or .rpc, depth_points.csv, true_dsm.asc, transient_%03d.pgm masks.
void synthesize_dataset(const SynthParams& params, const std::string& out_dir);

Dataset load_dataset(const std::string& dir);

}  // namespace strf
