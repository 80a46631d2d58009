// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "strf/rng.hpp"

namespace fs = std::filesystem;

namespace strf {

namespace {

constexpr int kMarchSteps = 512;
constexpr double kBisectTol = 1e-4;

// First terrain hit along the ray, NaN on a miss.
double march_depth(const SyntheticScene& scene, const Ray& ray) {
    double t0, t1;
    if (!scene.bounds.ray_range(ray.origin, ray.dir, &t0, &t1))
        return std::numeric_limits<double>::quiet_NaN();
    auto above = [&](double t) {
        const Vec3 p = ray.origin + t * ray.dir;
        return p.z - scene.height(p.x, p.y);
    };
    double prev_t = t0;
    double prev_f = above(t0);
    if (prev_f <= 0.0) return t0;  // started at/under the surface
    const double dt = (t1 - t0) / kMarchSteps;
    for (int i = 1; i <= kMarchSteps; ++i) {
        const double t = t0 + i * dt;
        const double f = above(t);
        if (f <= 0.0) {
            double lo = prev_t, hi = t;
            while (hi - lo > kBisectTol) {
                const double mid = 0.5 * (lo + hi);
                if (above(mid) <= 0.0) hi = mid;
                else lo = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev_t = t;
        prev_f = f;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

std::string view_stem(const std::string& dir, int v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "view_%03d", v);
    return dir + "/" + buf;
}

}  // namespace

double SyntheticScene::height(double x, double y) const {
    double z = mean_altitude;
    for (const auto& w : waves) z += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
    return z;
}

Vec3 SyntheticScene::height_gradient(double x, double y) const {
    double gx = 0, gy = 0;
    for (const auto& w : waves) {
        const double c = w.amp * std::cos(w.kx * x + w.ky * y + w.phase);
        gx += w.kx * c;
        gy += w.ky * c;
    }
    return {gx, gy, 0};
}

Vec3 SyntheticScene::surface_normal(double x, double y) const {
    const Vec3 g = height_gradient(x, y);
    return Vec3{-g.x, -g.y, 1.0}.normalized();
}

Vec3 SyntheticScene::albedo(double x, double y) const {
    Vec3 out;
    double* ch[3] = {&out.x, &out.y, &out.z};
    for (int c = 0; c < 3; ++c) {
        const auto& w = albedo_waves[c];
        *ch[c] = 0.5 + w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
    }
    return out;
}

Vec3 SyntheticScene::shade(const Vec3& p, const Vec3& normal, const Vec3& view,
                           const Vec3& tint) const {
    const double ndots = std::max(0.0, dot(normal, sun));
    const Vec3 refl = 2.0 * dot(normal, sun) * normal - sun;
    const double spec =
        k_specular * std::pow(std::max(0.0, dot(refl, view)), shininess);
    const Vec3 alb = albedo(p.x, p.y);
    Vec3 out{tint.x * (alb.x * ndots + spec + ambient),
             tint.y * (alb.y * ndots + spec + ambient),
             tint.z * (alb.z * ndots + spec + ambient)};
    out.x = std::clamp(out.x, 0.0, 1.0);
    out.y = std::clamp(out.y, 0.0, 1.0);
    out.z = std::clamp(out.z, 0.0, 1.0);
    return out;
}

SyntheticScene make_scene(uint64_t seed, const SceneParams& params) {
    params.bounds.validate();
    SyntheticScene scene;
    scene.seed = seed;
    scene.bounds = params.bounds;
    scene.mean_altitude = params.mean_altitude;
    scene.k_specular = params.k_specular;
    scene.shininess = params.shininess;
    scene.ambient = params.ambient;
    scene.sun = params.sun.normalized();

    Rng rng(seed, 11);
    const double headroom =
        std::min(params.bounds.max.z - params.mean_altitude,
                 params.mean_altitude - params.bounds.min.z);
    if (headroom <= 0.0)
        throw std::invalid_argument("make_scene: mean altitude outside the Z bounds");

    const int per_octave = 3;
    std::vector<double> raw_amp;
    double amp_sum = 0.0;
    for (int o = 0; o < params.octaves; ++o)
        for (int k = 0; k < per_octave; ++k) {
            raw_amp.push_back(std::pow(0.5, o) * rng.uniform(0.6, 1.0));
            amp_sum += raw_amp.back();
        }
    // Total amplitude capped at 90% of headroom so extrema stay in bounds.
    const double total = params.roughness * 0.9 * headroom;
    const double base_freq = 6.283185307179586 / (params.bounds.max.x - params.bounds.min.x);
    size_t wi = 0;
    for (int o = 0; o < params.octaves; ++o)
        for (int k = 0; k < per_octave; ++k, ++wi) {
            SyntheticScene::Wave w;
            const double theta = rng.uniform(0.0, 6.283185307179586);
            const double freq = base_freq * std::pow(2.0, o) * rng.uniform(0.75, 1.25);
            w.kx = freq * std::cos(theta);
            w.ky = freq * std::sin(theta);
            w.phase = rng.uniform(0.0, 6.283185307179586);
            w.amp = amp_sum > 0 ? total * raw_amp[wi] / amp_sum : 0.0;
            scene.waves.push_back(w);
        }

    for (int c = 0; c < 3; ++c) {
        auto& w = scene.albedo_waves[c];
        const double theta = rng.uniform(0.0, 6.283185307179586);
        const double freq = base_freq * rng.uniform(1.0, 3.0);
        w.kx = freq * std::cos(theta);
        w.ky = freq * std::sin(theta);
        w.phase = rng.uniform(0.0, 6.283185307179586);
        w.amp = 0.45;
    }
    return scene;
}

OracleRender oracle_render(const SyntheticScene& scene, const CameraVariant& cam,
                           const Vec3& tint) {
    const int W = camera_width(cam);
    const int H = camera_height(cam);
    OracleRender out;
    out.rgb = Image(W, H);
    out.depth.assign(size_t(W) * H, std::numeric_limits<double>::quiet_NaN());
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            const Ray ray = camera_ray(cam, r, c, scene.bounds);
            const double t = march_depth(scene, ray);
            float* px = out.rgb.px(r, c);
            if (!std::isfinite(t)) {
                px[0] = px[1] = px[2] = 0.f;
                continue;
            }
            const Vec3 p = ray.origin + t * ray.dir;
            const Vec3 n = scene.surface_normal(p.x, p.y);
            const Vec3 color = scene.shade(p, n, -ray.dir, tint);
            px[0] = float(color.x);
            px[1] = float(color.y);
            px[2] = float(color.z);
            out.depth[size_t(r) * W + c] = t;
        }
    return out;
}

TransientMask inject_transients(Image& img, uint64_t seed, int k) {
    TransientMask out;
    out.mask.assign(size_t(img.width) * img.height, 0);
    if (k <= 0) return out;
    Rng rng(seed, 17);
    int placed = 0;
    int attempts = 0;
    const int max_attempts = 200 * k;
    while (placed < k && attempts < max_attempts) {
        ++attempts;
        const int w = 3 + int(rng.below(7));  // 3..9
        const int h = 3 + int(rng.below(7));
        if (img.width < w || img.height < h) continue;
        const int r0 = int(rng.below(uint32_t(img.height - h + 1)));
        const int c0 = int(rng.below(uint32_t(img.width - w + 1)));
        bool clear = true;
        for (int r = r0; r < r0 + h && clear; ++r)
            for (int c = c0; c < c0 + w && clear; ++c)
                if (out.mask[size_t(r) * img.width + c]) clear = false;
        if (!clear) continue;
        float color[3];
        for (float& ch : color) ch = rng.uniform() < 0.5 ? 0.03f : 0.97f;
        for (int r = r0; r < r0 + h; ++r)
            for (int c = c0; c < c0 + w; ++c) {
                out.mask[size_t(r) * img.width + c] = 1;
                float* px = img.px(r, c);
                px[0] = color[0];
                px[1] = color[1];
                px[2] = color[2];
            }
        ++placed;
    }
    out.count = placed;
    return out;
}

std::vector<DepthPoint> sparse_depth_points(const SyntheticScene& scene,
                                            const std::vector<CameraVariant>& cams, int count,
                                            double noise_sigma, uint64_t seed) {
    std::vector<DepthPoint> out;
    if (cams.empty() || count <= 0) return out;
    Rng rng(seed, 23);
    int guard = 0;
    while (int(out.size()) < count && guard < count * 50) {
        ++guard;
        const int v = int(rng.below(uint32_t(cams.size())));
        const int W = camera_width(cams[v]);
        const int H = camera_height(cams[v]);
        const int row = int(rng.below(uint32_t(H)));
        const int col = int(rng.below(uint32_t(W)));
        const Ray ray = camera_ray(cams[v], row, col, scene.bounds);
        const double t = march_depth(scene, ray);
        if (!std::isfinite(t)) continue;
        DepthPoint p;
        p.view = v;
        p.row = row;
        p.col = col;
        p.distance = t + (noise_sigma > 0 ? rng.normal(0.0, noise_sigma) : 0.0);
        const double reproj_err = std::abs(rng.normal(0.0, 0.5));
        p.weight = 1.0 / (1.0 + reproj_err);
        out.push_back(p);
    }
    return out;
}

void Dataset::index_depth_points() {
    depth_lookup.clear();
    for (const auto& p : depth_points)
        depth_lookup[pixel_key(p.view, p.row, p.col)] = {p.distance, p.weight};
}

std::vector<int> Dataset::train_view_ids() const {
    std::vector<int> ids;
    for (int v = 0; v < int(views.size()); ++v)
        if (!test_views.count(v)) ids.push_back(v);
    return ids;
}

std::optional<std::pair<double, double>> Dataset::depth_at(int view, int row, int col) const {
    const auto it = depth_lookup.find(pixel_key(view, row, col));
    if (it == depth_lookup.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Dataset directory IO

namespace {

PinholeCamera make_orbit_camera(const SceneBounds& bounds, double azimuth, double tilt,
                                int image_size, double mean_alt) {
    const Vec3 center{0.5 * (bounds.min.x + bounds.max.x), 0.5 * (bounds.min.y + bounds.max.y),
                      mean_alt};
    const Vec3 ext = bounds.extent();
    const double radius = 0.5 * std::max(ext.x, ext.y);
    const double dist = 3.2 * std::max({ext.x, ext.y, ext.z});
    const Vec3 eye = center + dist * Vec3{std::sin(tilt) * std::cos(azimuth),
                                          std::sin(tilt) * std::sin(azimuth), std::cos(tilt)};
    const Vec3 f = (center - eye).normalized();
    Vec3 up_hint{0, 1, 0};
    if (std::abs(f.y) > 0.9) up_hint = {1, 0, 0};
    const Vec3 r = cross(up_hint, f).normalized();
    const Vec3 d = cross(f, r);

    PinholeCamera cam;
    cam.width = cam.height = image_size;
    for (int i = 0; i < 3; ++i) {
        cam.rot(0, i) = r[i];
        cam.rot(1, i) = d[i];
        cam.rot(2, i) = f[i];
    }
    cam.trans = -(cam.rot * eye);
    cam.cx = image_size / 2.0;
    cam.cy = image_size / 2.0;
    // Focal length framing the scene footprint with a small margin.
    cam.fx = cam.fy = (image_size / 2.0) * dist / (radius * 1.25);
    cam.validate();
    return cam;
}

RpcCamera make_synthetic_rpc(const SceneBounds& bounds, double azimuth, double tilt,
                             int image_size, Rng& rng) {
    RpcCamera cam;
    cam.width = cam.height = image_size;
    const Vec3 ext = bounds.extent();
    cam.lat_off = 0.5 * (bounds.min.x + bounds.max.x);
    cam.lat_scale = 0.65 * ext.x;
    cam.lon_off = 0.5 * (bounds.min.y + bounds.max.y);
    cam.lon_scale = 0.65 * ext.y;
    cam.height_off = 0.5 * (bounds.min.z + bounds.max.z);
    cam.height_scale = 0.75 * ext.z;
    cam.line_off = image_size / 2.0;
    cam.line_scale = image_size / 2.0;
    cam.samp_off = image_size / 2.0;
    cam.samp_scale = image_size / 2.0;

    // Near-affine pushbroom look: image coords follow ground X/Y with a
    // tilt-dependent parallax in H plus mild cubic perturbations.
    const double kx = std::tan(tilt) * std::cos(azimuth);
    const double ky = std::tan(tilt) * std::sin(azimuth);
    cam.line_den[0] = cam.samp_den[0] = 1.0;
    cam.samp_num[2] = 0.82;                                     // P
    cam.samp_num[3] = 0.82 * kx * cam.height_scale / cam.lat_scale;  // H parallax
    cam.line_num[1] = 0.82;                                     // L
    cam.line_num[3] = 0.82 * ky * cam.height_scale / cam.lon_scale;
    // Small high-order terms keep the inverse genuinely iterative.
    cam.samp_num[7] = rng.uniform(-1.0, 1.0) * 2e-3;   // L^2
    cam.samp_num[8] = rng.uniform(-1.0, 1.0) * 2e-3;   // P^2
    cam.line_num[8] = rng.uniform(-1.0, 1.0) * 2e-3;
    cam.line_num[7] = rng.uniform(-1.0, 1.0) * 2e-3;
    cam.samp_den[3] = rng.uniform(-1.0, 1.0) * 1e-3;   // H
    cam.line_den[3] = rng.uniform(-1.0, 1.0) * 1e-3;
    cam.validate();
    return cam;
}

}  // namespace

void synthesize_dataset(const SynthParams& params, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const SyntheticScene scene = make_scene(params.seed, params.scene);
    Rng rig_rng(params.seed, 31);
    Rng tint_rng(params.seed, 37);

    std::vector<CameraVariant> cams;
    std::vector<Vec3> tints;
    for (int v = 0; v < params.n_views; ++v) {
        const double az = 6.283185307179586 * v / params.n_views + rig_rng.uniform(-0.08, 0.08);
        const double tilt = rig_rng.uniform(0.15, 0.45);
        if (params.cam_kind == "rpc")
            cams.push_back(make_synthetic_rpc(scene.bounds, az, tilt, params.image_size, rig_rng));
        else
            cams.push_back(make_orbit_camera(scene.bounds, az, tilt, params.image_size,
                                             scene.mean_altitude));
        Vec3 tint{1, 1, 1};
        if (params.tints) {
            tint = {1.0 - params.tint_strength * tint_rng.uniform(0.0, 1.0),
                    1.0 - params.tint_strength * tint_rng.uniform(0.0, 1.0),
                    1.0 - params.tint_strength * tint_rng.uniform(0.0, 1.0)};
        }
        tints.push_back(tint);
    }

    for (int v = 0; v < params.n_views; ++v) {
        OracleRender rendered = oracle_render(scene, cams[v], tints[v]);
        if (params.transients_per_view > 0) {
            const TransientMask mask = inject_transients(
                rendered.rgb, Rng::mix(params.seed, uint64_t(v), 0x77), params.transients_per_view);
            char buf[32];
            std::snprintf(buf, sizeof buf, "transient_%03d.pgm", v);
            save_pgm8(mask.mask, rendered.rgb.width, rendered.rgb.height,
                      out_dir + "/" + buf);
        }
        save_ppm(rendered.rgb, view_stem(out_dir, v) + ".ppm");
        if (const auto* pin = std::get_if<PinholeCamera>(&cams[v]))
            save_pinhole(*pin, view_stem(out_dir, v) + ".cam");
        else
            save_rpc(std::get<RpcCamera>(cams[v]), view_stem(out_dir, v) + ".rpc");
    }

    // Depth supervision from train views only.
    std::vector<CameraVariant> train_cams;
    for (int v = 0; v < params.n_views - params.test_views; ++v) train_cams.push_back(cams[v]);
    const auto points = sparse_depth_points(scene, train_cams, params.depth_points,
                                            params.depth_noise, Rng::mix(params.seed, 0x5ca1e));
    {
        std::ofstream csv(out_dir + "/depth_points.csv");
        csv << "view,row,col,dist,weight\n";
        csv.precision(17);
        for (const auto& p : points)
            csv << p.view << "," << p.row << "," << p.col << "," << p.distance << "," << p.weight
                << "\n";
    }

    // Reference surface grid for altitude evaluation.
    {
        Dsm dsm;
        dsm.cellsize = params.dsm_cellsize;
        dsm.xll = scene.bounds.min.x;
        dsm.yll = scene.bounds.min.y;
        dsm.ncols = std::max(1, int(std::ceil((scene.bounds.max.x - scene.bounds.min.x) /
                                              dsm.cellsize)));
        dsm.nrows = std::max(1, int(std::ceil((scene.bounds.max.y - scene.bounds.min.y) /
                                              dsm.cellsize)));
        dsm.values.resize(size_t(dsm.ncols) * dsm.nrows);
        for (int r = 0; r < dsm.nrows; ++r)
            for (int c = 0; c < dsm.ncols; ++c) {
                const double x = dsm.xll + (c + 0.5) * dsm.cellsize;
                const double y = dsm.yll + (dsm.nrows - 1 - r + 0.5) * dsm.cellsize;
                dsm.values[size_t(r) * dsm.ncols + c] = scene.height(x, y);
            }
        save_dsm_ascii(dsm, out_dir + "/true_dsm.asc");
    }

    std::ofstream meta(out_dir + "/scene.txt");
    meta.precision(17);
    meta << "BOUNDS_MIN = " << scene.bounds.min.x << " " << scene.bounds.min.y << " "
         << scene.bounds.min.z << "\n";
    meta << "BOUNDS_MAX = " << scene.bounds.max.x << " " << scene.bounds.max.y << " "
         << scene.bounds.max.z << "\n";
    meta << "SEED = " << params.seed << "\n";
    meta << "N_VIEWS = " << params.n_views << "\n";
    meta << "TEST_VIEWS =";
    for (int v = params.n_views - params.test_views; v < params.n_views; ++v) meta << " " << v;
    meta << "\n";
    meta << "IMAGE_SIZE = " << params.image_size << "\n";
    meta << "CAM_KIND = " << params.cam_kind << "\n";
    meta << "DSM_CELLSIZE = " << params.dsm_cellsize << "\n";
    meta << "TRUE_DSM = true_dsm.asc\n";
    meta << "MEAN_ALT = " << params.scene.mean_altitude << "\n";
    meta << "ROUGHNESS = " << params.scene.roughness << "\n";
    meta << "K_SPECULAR = " << params.scene.k_specular << "\n";
    meta << "SHININESS = " << params.scene.shininess << "\n";
    meta << "AMBIENT = " << params.scene.ambient << "\n";
    meta << "SUN = " << scene.sun.x << " " << scene.sun.y << " " << scene.sun.z << "\n";
    meta << "TRANSIENTS = " << params.transients_per_view << "\n";
    meta << "TINTS = " << (params.tints ? 1 : 0) << "\n";
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream meta(dir + "/scene.txt");
    if (!meta) throw std::runtime_error("dataset: cannot open " + dir + "/scene.txt");
    Dataset ds;
    int n_views = 0;
    std::string line;
    while (std::getline(meta, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        std::istringstream val(line.substr(eq + 1));
        if (key == "BOUNDS_MIN") val >> ds.bounds.min.x >> ds.bounds.min.y >> ds.bounds.min.z;
        else if (key == "BOUNDS_MAX") val >> ds.bounds.max.x >> ds.bounds.max.y >> ds.bounds.max.z;
        else if (key == "N_VIEWS") val >> n_views;
        else if (key == "TEST_VIEWS") {
            int v;
            while (val >> v) ds.test_views.insert(v);
        } else if (key == "DSM_CELLSIZE") val >> ds.dsm_cellsize;
        else if (key == "TRUE_DSM") {
            std::string name;
            val >> name;
            ds.true_dsm_path = dir + "/" + name;
        }
    }
    ds.bounds.validate();
    if (n_views <= 0) throw std::runtime_error("dataset: N_VIEWS missing in scene.txt");

    for (int v = 0; v < n_views; ++v) {
        View view;
        view.gt = load_ppm(view_stem(dir, v) + ".ppm");
        const std::string cam_path = view_stem(dir, v) + ".cam";
        if (fs::exists(cam_path)) view.camera = load_pinhole(cam_path);
        else view.camera = load_rpc(view_stem(dir, v) + ".rpc");
        ds.views.push_back(std::move(view));
    }

    const std::string csv_path = dir + "/depth_points.csv";
    if (fs::exists(csv_path)) {
        std::ifstream csv(csv_path);
        std::getline(csv, line);  // header
        while (std::getline(csv, line)) {
            if (line.empty()) continue;
            DepthPoint p;
            char comma;
            std::istringstream row(line);
            if (row >> p.view >> comma >> p.row >> comma >> p.col >> comma >> p.distance >>
                comma >> p.weight)
                ds.depth_points.push_back(p);
        }
    }
    ds.index_depth_points();
    return ds;
}

}  // namespace strf
