// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace strf {

Mat3 Mat3::axis_angle(const Vec3& axis, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    const double t = 1.0 - c;
    const Vec3 a = axis;
    Mat3 r;
    r(0, 0) = c + a.x * a.x * t;
    r(0, 1) = a.x * a.y * t - a.z * s;
    r(0, 2) = a.x * a.z * t + a.y * s;
    r(1, 0) = a.y * a.x * t + a.z * s;
    r(1, 1) = c + a.y * a.y * t;
    r(1, 2) = a.y * a.z * t - a.x * s;
    r(2, 0) = a.z * a.x * t - a.y * s;
    r(2, 1) = a.z * a.y * t + a.x * s;
    r(2, 2) = c + a.z * a.z * t;
    return r;
}

void SceneBounds::validate() const {
    if (!(min.x < max.x && min.y < max.y && min.z < max.z))
        throw std::invalid_argument("SceneBounds: min must be < max component-wise");
}

bool SceneBounds::contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
}

Vec3 SceneBounds::normalize(const Vec3& p, bool* clamped) const {
    const Vec3 e = extent();
    Vec3 q{(p.x - min.x) / e.x, (p.y - min.y) / e.y, (p.z - min.z) / e.z};
    bool cl = false;
    auto clamp01 = [&cl](double v) {
        if (v < 0.0) { cl = true; return 0.0; }
        if (v > 1.0) { cl = true; return 1.0; }
        return v;
    };
    q = {clamp01(q.x), clamp01(q.y), clamp01(q.z)};
    if (clamped) *clamped = cl;
    return q;
}

Vec3 SceneBounds::denormalize(const Vec3& q) const {
    const Vec3 e = extent();
    return {min.x + q.x * e.x, min.y + q.y * e.y, min.z + q.z * e.z};
}

bool SceneBounds::ray_range(const Vec3& o, const Vec3& d, double* t0, double* t1) const {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    const double os[3] = {o.x, o.y, o.z};
    const double ds[3] = {d.x, d.y, d.z};
    const double mins[3] = {min.x, min.y, min.z};
    const double maxs[3] = {max.x, max.y, max.z};
    for (int a = 0; a < 3; ++a) {
        if (ds[a] == 0.0) {
            if (os[a] < mins[a] || os[a] > maxs[a]) return false;
            continue;
        }
        double ta = (mins[a] - os[a]) / ds[a];
        double tb = (maxs[a] - os[a]) / ds[a];
        if (ta > tb) std::swap(ta, tb);
        lo = std::max(lo, ta);
        hi = std::min(hi, tb);
    }
    if (lo > hi || hi < 0.0) return false;
    *t0 = std::max(lo, 0.0);
    *t1 = hi;
    return *t0 < *t1;
}

void PinholeCamera::validate() const {
    const Mat3 rtr = rot.transposed() * rot;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            if (std::abs(rtr(i, j) - want) > 1e-9)
                throw std::invalid_argument("PinholeCamera: rotation not orthonormal");
        }
    if (std::abs(rot.det() - 1.0) > 1e-9)
        throw std::invalid_argument("PinholeCamera: rotation determinant != +1");
}

std::array<double, 3> PinholeCamera::project(const Vec3& p) const {
    const Vec3 pc = rot * p + trans;
    const double u = fx * pc.x / pc.z + cx;
    const double v = fy * pc.y / pc.z + cy;
    return {v, u, pc.z};
}

Ray PinholeCamera::pixel_ray(int row, int col) const {
    const Vec3 dir_cam{(col + 0.5 - cx) / fx, (row + 0.5 - cy) / fy, 1.0};
    Ray r;
    r.origin = center();
    r.dir = rot.transposed_mul(dir_cam).normalized();
    r.row = row;
    r.col = col;
    return r;
}

RayBatch generate_rays_pinhole(const PinholeCamera& cam,
                               const std::vector<std::pair<int, int>>& pixels) {
    RayBatch batch;
    batch.rays.reserve(pixels.size());
    for (size_t i = 0; i < pixels.size(); ++i) {
        const auto [row, col] = pixels[i];
        if (row < 0 || row >= cam.height || col < 0 || col >= cam.width)
            throw std::out_of_range("generate_rays_pinhole: pixel index " + std::to_string(i) +
                                    " (" + std::to_string(row) + "," + std::to_string(col) +
                                    ") outside image");
        batch.rays.push_back(cam.pixel_ray(row, col));
    }
    return batch;
}

// ---------------------------------------------------------------------------
// RPC model

namespace {

// Standard RPC00B term order over normalized (P=lat, L=lon, H=height).
void rpc_terms(double P, double L, double H, double* t) {
    t[0] = 1.0;
    t[1] = L;
    t[2] = P;
    t[3] = H;
    t[4] = L * P;
    t[5] = L * H;
    t[6] = P * H;
    t[7] = L * L;
    t[8] = P * P;
    t[9] = H * H;
    t[10] = P * L * H;
    t[11] = L * L * L;
    t[12] = L * P * P;
    t[13] = L * H * H;
    t[14] = L * L * P;
    t[15] = P * P * P;
    t[16] = P * H * H;
    t[17] = L * L * H;
    t[18] = P * P * H;
    t[19] = H * H * H;
}

// d(term)/dP and d(term)/dL at (P, L, H).
void rpc_term_derivs(double P, double L, double H, double* dP, double* dL) {
    dP[0] = 0;      dL[0] = 0;
    dP[1] = 0;      dL[1] = 1;
    dP[2] = 1;      dL[2] = 0;
    dP[3] = 0;      dL[3] = 0;
    dP[4] = L;      dL[4] = P;
    dP[5] = 0;      dL[5] = H;
    dP[6] = H;      dL[6] = 0;
    dP[7] = 0;      dL[7] = 2 * L;
    dP[8] = 2 * P;  dL[8] = 0;
    dP[9] = 0;      dL[9] = 0;
    dP[10] = L * H; dL[10] = P * H;
    dP[11] = 0;             dL[11] = 3 * L * L;
    dP[12] = 2 * L * P;     dL[12] = P * P;
    dP[13] = 0;             dL[13] = H * H;
    dP[14] = L * L;         dL[14] = 2 * L * P;
    dP[15] = 3 * P * P;     dL[15] = 0;
    dP[16] = H * H;         dL[16] = 0;
    dP[17] = 0;             dL[17] = 2 * L * H;
    dP[18] = 2 * P * H;     dL[18] = 0;
    dP[19] = 0;             dL[19] = 0;
}

double poly_eval(const std::array<double, 20>& c, const double* t) {
    double s = 0;
    for (int i = 0; i < 20; ++i) s += c[i] * t[i];
    return s;
}

}  // namespace

void RpcCamera::validate() const {
    if (line_den[0] == 0.0 || samp_den[0] == 0.0)
        throw std::invalid_argument("RpcCamera: denominator constant coefficient is zero");
    for (double s : {lat_scale, lon_scale, height_scale, line_scale, samp_scale})
        if (!(s > 0.0)) throw std::invalid_argument("RpcCamera: scales must be positive");
}

std::array<double, 2> RpcCamera::project(const Vec3& ground) const {
    const double P = (ground.x - lat_off) / lat_scale;
    const double L = (ground.y - lon_off) / lon_scale;
    const double H = (ground.z - height_off) / height_scale;
    double t[20];
    rpc_terms(P, L, H, t);
    const double rn = poly_eval(line_num, t) / poly_eval(line_den, t);
    const double cn = poly_eval(samp_num, t) / poly_eval(samp_den, t);
    return {rn * line_scale + line_off, cn * samp_scale + samp_off};
}

RpcLocalizeResult rpc_localize(const RpcCamera& cam, double row, double col, double altitude) {
    RpcLocalizeResult res;
    const double H = (altitude - cam.height_off) / cam.height_scale;
    const double r_target = (row - cam.line_off) / cam.line_scale;
    const double c_target = (col - cam.samp_off) / cam.samp_scale;

    double P = 0.0, L = 0.0;
    double t[20], dP[20], dL[20];

    auto residual = [&](double p, double l, double* fr, double* fc) {
        rpc_terms(p, l, H, t);
        const double ln = poly_eval(cam.line_num, t), ld = poly_eval(cam.line_den, t);
        const double sn = poly_eval(cam.samp_num, t), sd = poly_eval(cam.samp_den, t);
        *fr = ln / ld - r_target;
        *fc = sn / sd - c_target;
    };

    double fr, fc;
    residual(P, L, &fr, &fc);
    const int max_iters = 20;
    for (int it = 0; it < max_iters; ++it) {
        // Pixel-space residual for the convergence check.
        const double px_err = std::hypot(fr * cam.line_scale, fc * cam.samp_scale);
        res.iterations = it;
        res.residual_px = px_err;
        if (px_err < 1e-4) {
            res.ok = true;
            res.point = {P * cam.lat_scale + cam.lat_off, L * cam.lon_scale + cam.lon_off,
                         altitude};
            return res;
        }

        rpc_terms(P, L, H, t);
        rpc_term_derivs(P, L, H, dP, dL);
        const double ln = poly_eval(cam.line_num, t), ld = poly_eval(cam.line_den, t);
        const double sn = poly_eval(cam.samp_num, t), sd = poly_eval(cam.samp_den, t);
        // Quotient-rule Jacobian of the normalized image coordinates.
        auto dquot = [](double n, double d, double dn, double dd) {
            return (dn * d - n * dd) / (d * d);
        };
        const double j00 = dquot(ln, ld, poly_eval(cam.line_num, dP), poly_eval(cam.line_den, dP));
        const double j01 = dquot(ln, ld, poly_eval(cam.line_num, dL), poly_eval(cam.line_den, dL));
        const double j10 = dquot(sn, sd, poly_eval(cam.samp_num, dP), poly_eval(cam.samp_den, dP));
        const double j11 = dquot(sn, sd, poly_eval(cam.samp_num, dL), poly_eval(cam.samp_den, dL));
        const double det = j00 * j11 - j01 * j10;
        if (std::abs(det) < 1e-300) break;
        double step_p = -(j11 * fr - j01 * fc) / det;
        double step_l = -(-j10 * fr + j00 * fc) / det;

        // Damping: halve the step until the residual improves or the step
        // collapses below the floor.
        const double base = std::hypot(fr, fc);
        double scale = 1.0;
        bool accepted = false;
        while (scale * std::hypot(step_p, step_l) > 1e-10) {
            double fr2, fc2;
            residual(P + scale * step_p, L + scale * step_l, &fr2, &fc2);
            if (std::hypot(fr2, fc2) < base) {
                P += scale * step_p;
                L += scale * step_l;
                fr = fr2;
                fc = fc2;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) break;
    }
    res.residual_px = std::hypot(fr * cam.line_scale, fc * cam.samp_scale);
    if (res.residual_px < 1e-4) {
        res.ok = true;
        res.point = {P * cam.lat_scale + cam.lat_off, L * cam.lon_scale + cam.lon_off, altitude};
    }
    return res;
}

RpcRayResult rpc_ray(const RpcCamera& cam, double row, double col, const SceneBounds& bounds) {
    RpcRayResult out;
    if (!(bounds.max.z > bounds.min.z)) {
        out.error = "rpc_ray: degenerate altitude extent";
        return out;
    }
    const RpcLocalizeResult top = rpc_localize(cam, row, col, bounds.max.z);
    if (!top.ok) {
        out.error = "rpc_ray: localization failed at top altitude (residual " +
                    std::to_string(top.residual_px) + " px)";
        return out;
    }
    const RpcLocalizeResult bot = rpc_localize(cam, row, col, bounds.min.z);
    if (!bot.ok) {
        out.error = "rpc_ray: localization failed at bottom altitude (residual " +
                    std::to_string(bot.residual_px) + " px)";
        return out;
    }
    const Vec3 d = bot.point - top.point;
    const double n = d.norm();
    if (n <= 0.0) {
        out.error = "rpc_ray: degenerate ray";
        return out;
    }
    out.ok = true;
    out.ray.origin = top.point;
    out.ray.dir = d / n;
    out.ray.row = static_cast<int>(row);
    out.ray.col = static_cast<int>(col);
    return out;
}

RaySampleSet sample_along_ray(const Ray& ray, const SceneBounds& bounds, int n_samples,
                              bool stratified, Rng& rng) {
    RaySampleSet s;
    double t0, t1;
    if (n_samples < 1 || !bounds.ray_range(ray.origin, ray.dir, &t0, &t1)) {
        s.miss = true;
        return s;
    }
    s.t_min = t0;
    s.t_max = t1;
    const double width = (t1 - t0) / n_samples;
    s.t.resize(n_samples);
    s.delta.resize(n_samples);
    s.positions.resize(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const double u = stratified ? rng.uniform() : 0.5;
        s.t[i] = t0 + (i + u) * width;
        s.positions[i] = bounds.normalize(ray.origin + s.t[i] * ray.dir);
    }
    for (int i = 0; i + 1 < n_samples; ++i) s.delta[i] = s.t[i + 1] - s.t[i];
    s.delta[n_samples - 1] = width;
    return s;
}

// ---------------------------------------------------------------------------
// Text IO

namespace {

std::map<std::string, std::string> read_kv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string v) {
            const auto a = v.find_first_not_of(" \t\r\n");
            if (a == std::string::npos) return std::string();
            const auto b = v.find_last_not_of(" \t\r\n");
            return v.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

double get_num(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("missing key " + key);
    return std::stod(it->second);
}

}  // namespace

RpcCamera load_rpc(const std::string& path) {
    const auto kv = read_kv(path);
    RpcCamera cam;
    for (int i = 0; i < 20; ++i) {
        const std::string n = std::to_string(i + 1);
        cam.line_num[i] = get_num(kv, "LINE_NUM_COEFF_" + n);
        cam.line_den[i] = get_num(kv, "LINE_DEN_COEFF_" + n);
        cam.samp_num[i] = get_num(kv, "SAMP_NUM_COEFF_" + n);
        cam.samp_den[i] = get_num(kv, "SAMP_DEN_COEFF_" + n);
    }
    cam.lat_off = get_num(kv, "LAT_OFF");
    cam.lat_scale = get_num(kv, "LAT_SCALE");
    cam.lon_off = get_num(kv, "LONG_OFF");
    cam.lon_scale = get_num(kv, "LONG_SCALE");
    cam.height_off = get_num(kv, "HEIGHT_OFF");
    cam.height_scale = get_num(kv, "HEIGHT_SCALE");
    cam.line_off = get_num(kv, "LINE_OFF");
    cam.line_scale = get_num(kv, "LINE_SCALE");
    cam.samp_off = get_num(kv, "SAMP_OFF");
    cam.samp_scale = get_num(kv, "SAMP_SCALE");
    cam.width = static_cast<int>(get_num(kv, "WIDTH"));
    cam.height = static_cast<int>(get_num(kv, "HEIGHT"));
    cam.validate();
    return cam;
}

void save_rpc(const RpcCamera& cam, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    for (int i = 0; i < 20; ++i) {
        const std::string n = std::to_string(i + 1);
        out << "LINE_NUM_COEFF_" << n << " = " << cam.line_num[i] << "\n";
        out << "LINE_DEN_COEFF_" << n << " = " << cam.line_den[i] << "\n";
        out << "SAMP_NUM_COEFF_" << n << " = " << cam.samp_num[i] << "\n";
        out << "SAMP_DEN_COEFF_" << n << " = " << cam.samp_den[i] << "\n";
    }
    out << "LAT_OFF = " << cam.lat_off << "\nLAT_SCALE = " << cam.lat_scale << "\n";
    out << "LONG_OFF = " << cam.lon_off << "\nLONG_SCALE = " << cam.lon_scale << "\n";
    out << "HEIGHT_OFF = " << cam.height_off << "\nHEIGHT_SCALE = " << cam.height_scale << "\n";
    out << "LINE_OFF = " << cam.line_off << "\nLINE_SCALE = " << cam.line_scale << "\n";
    out << "SAMP_OFF = " << cam.samp_off << "\nSAMP_SCALE = " << cam.samp_scale << "\n";
    out << "WIDTH = " << cam.width << "\nHEIGHT = " << cam.height << "\n";
}

PinholeCamera load_pinhole(const std::string& path) {
    const auto kv = read_kv(path);
    PinholeCamera cam;
    cam.fx = get_num(kv, "FX");
    cam.fy = get_num(kv, "FY");
    cam.cx = get_num(kv, "CX");
    cam.cy = get_num(kv, "CY");
    for (int i = 0; i < 9; ++i) cam.rot.m[i] = get_num(kv, "R" + std::to_string(i));
    cam.trans = {get_num(kv, "TX"), get_num(kv, "TY"), get_num(kv, "TZ")};
    cam.width = static_cast<int>(get_num(kv, "WIDTH"));
    cam.height = static_cast<int>(get_num(kv, "HEIGHT"));
    cam.validate();
    return cam;
}

void save_pinhole(const PinholeCamera& cam, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "FX = " << cam.fx << "\nFY = " << cam.fy << "\n";
    out << "CX = " << cam.cx << "\nCY = " << cam.cy << "\n";
    for (int i = 0; i < 9; ++i) out << "R" << i << " = " << cam.rot.m[i] << "\n";
    out << "TX = " << cam.trans.x << "\nTY = " << cam.trans.y << "\nTZ = " << cam.trans.z << "\n";
    out << "WIDTH = " << cam.width << "\nHEIGHT = " << cam.height << "\n";
}

}  // namespace strf
