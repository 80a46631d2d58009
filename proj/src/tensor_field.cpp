// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/tensor_field.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace strf {

namespace {

// Upper bound on channels*rank, sized for the CP rank sweeps used to match
// VM parameter counts.
constexpr int kMaxCr = 1024;

struct LineWeights {
    int i0, i1;
    double w0, w1;
};

// Clamp-to-edge linear weights for coordinate u in [0,1] over n nodes.
inline LineWeights line_weights(double u, int n) {
    if (n == 1) return {0, 0, 1.0, 0.0};
    double s = u * (n - 1);
    s = std::clamp(s, 0.0, double(n - 1));
    int i0 = static_cast<int>(s);
    if (i0 > n - 2) i0 = n - 2;
    const double f = s - i0;
    return {i0, i0 + 1, 1.0 - f, f};
}

}  // namespace

template <class Real>
void FieldLevel<Real>::allocate(Decomp decomp, int nx_, int ny_, int nz_, int rank_,
                                int channels_) {
    nx = nx_;
    ny = ny_;
    nz = nz_;
    rank = rank_;
    channels = channels_;
    if (cr() > kMaxCr) throw std::invalid_argument("FieldLevel: channels*rank too large");
    line_x.assign(size_t(nx) * cr(), Real(0));
    line_y.assign(size_t(ny) * cr(), Real(0));
    line_z.assign(size_t(nz) * cr(), Real(0));
    if (decomp == Decomp::VM) {
        plane_yz.assign(size_t(ny) * nz * cr(), Real(0));
        plane_xz.assign(size_t(nx) * nz * cr(), Real(0));
        plane_xy.assign(size_t(nx) * ny * cr(), Real(0));
    } else {
        plane_yz.clear();
        plane_xz.clear();
        plane_xy.clear();
    }
}

template <class Real>
size_t FieldLevel<Real>::param_count() const {
    return line_x.size() + line_y.size() + line_z.size() + plane_yz.size() + plane_xz.size() +
           plane_xy.size();
}

template <class Real>
MultiscaleField<Real> MultiscaleField<Real>::make_gradients() const {
    MultiscaleField<Real> g = *this;
    g.zero();
    return g;
}

std::vector<int> level_resolutions(int base, int max, int levels) {
    if (levels < 1 || base < 1 || base > max)
        throw std::invalid_argument("level_resolutions: need 1 <= base <= max, levels >= 1");
    if (levels == 1) return {max};
    const double b = std::pow(double(max) / base, 1.0 / (levels - 1));
    std::vector<int> out(levels);
    int prev = 0;
    for (int l = 0; l < levels; ++l) {
        int n = static_cast<int>(std::lround(base * std::pow(b, l)));
        n = std::max(n, prev);  // rounding must not break monotonicity
        out[l] = n;
        prev = n;
    }
    out.front() = base;
    out.back() = max;
    return out;
}

template <class Real>
MultiscaleField<Real> make_field(Decomp decomp, Aggregation agg, Activation act,
                                 const std::vector<int>& resolutions, int rank, int channels,
                                 Rng& rng) {
    MultiscaleField<Real> f;
    f.decomp = decomp;
    f.agg = agg;
    f.act = act;
    f.levels.resize(resolutions.size());
    const double stddev = 0.1 / std::sqrt(double(rank));
    for (size_t l = 0; l < resolutions.size(); ++l) {
        auto& lev = f.levels[l];
        lev.allocate(decomp, resolutions[l], resolutions[l], resolutions[l], rank, channels);
        for (auto* g : {&lev.line_x, &lev.line_y, &lev.line_z, &lev.plane_yz, &lev.plane_xz,
                        &lev.plane_xy})
            for (auto& v : *g) v = Real(rng.normal(0.0, stddev));
    }
    return f;
}

template <class Real>
void sample_level(const FieldLevel<Real>& level, Real x, Real y, Real z, Real* out) {
    const int cr = level.cr();
    const int R = level.rank;
    const LineWeights wx = line_weights(double(x), level.nx);
    const LineWeights wy = line_weights(double(y), level.ny);
    const LineWeights wz = line_weights(double(z), level.nz);

    Real lx[kMaxCr], ly[kMaxCr], lz[kMaxCr];
    {
        const Real* a = level.line_x.data() + size_t(wx.i0) * cr;
        const Real* b = level.line_x.data() + size_t(wx.i1) * cr;
        const Real u0 = Real(wx.w0), u1 = Real(wx.w1);
        for (int q = 0; q < cr; ++q) lx[q] = u0 * a[q] + u1 * b[q];
    }
    {
        const Real* a = level.line_y.data() + size_t(wy.i0) * cr;
        const Real* b = level.line_y.data() + size_t(wy.i1) * cr;
        const Real u0 = Real(wy.w0), u1 = Real(wy.w1);
        for (int q = 0; q < cr; ++q) ly[q] = u0 * a[q] + u1 * b[q];
    }
    {
        const Real* a = level.line_z.data() + size_t(wz.i0) * cr;
        const Real* b = level.line_z.data() + size_t(wz.i1) * cr;
        const Real u0 = Real(wz.w0), u1 = Real(wz.w1);
        for (int q = 0; q < cr; ++q) lz[q] = u0 * a[q] + u1 * b[q];
    }

    Real prod[kMaxCr];
    if (!level.has_planes()) {  // CP: product of the three line factors
        for (int q = 0; q < cr; ++q) prod[q] = lx[q] * ly[q] * lz[q];
        for (int c = 0; c < level.channels; ++c) {
            Real acc = 0;
            for (int r = 0; r < R; ++r) acc += prod[c * R + r];
            out[c] = acc;
        }
        return;
    }

    auto bilerp = [cr](const std::vector<Real>& grid, int n2, const LineWeights& wa,
                       const LineWeights& wb, Real* dst) {
        const Real* g00 = grid.data() + (size_t(wa.i0) * n2 + wb.i0) * cr;
        const Real* g01 = grid.data() + (size_t(wa.i0) * n2 + wb.i1) * cr;
        const Real* g10 = grid.data() + (size_t(wa.i1) * n2 + wb.i0) * cr;
        const Real* g11 = grid.data() + (size_t(wa.i1) * n2 + wb.i1) * cr;
        const Real c00 = Real(wa.w0 * wb.w0), c01 = Real(wa.w0 * wb.w1);
        const Real c10 = Real(wa.w1 * wb.w0), c11 = Real(wa.w1 * wb.w1);
        for (int q = 0; q < cr; ++q)
            dst[q] = c00 * g00[q] + c01 * g01[q] + c10 * g10[q] + c11 * g11[q];
    };

    Real pyz[kMaxCr], pxz[kMaxCr], pxy[kMaxCr];
    bilerp(level.plane_yz, level.nz, wy, wz, pyz);
    bilerp(level.plane_xz, level.nz, wx, wz, pxz);
    bilerp(level.plane_xy, level.ny, wx, wy, pxy);

    for (int q = 0; q < cr; ++q) prod[q] = lx[q] * pyz[q] + ly[q] * pxz[q] + lz[q] * pxy[q];
    for (int c = 0; c < level.channels; ++c) {
        Real acc = 0;
        for (int r = 0; r < R; ++r) acc += prod[c * R + r];
        out[c] = acc;
    }
}

template <class Real>
void sample_level_backward(const FieldLevel<Real>& level, FieldLevel<Real>& grads, Real x, Real y,
                           Real z, const Real* dout) {
    if (grads.nx != level.nx || grads.ny != level.ny || grads.nz != level.nz ||
        grads.rank != level.rank || grads.channels != level.channels ||
        grads.has_planes() != level.has_planes())
        throw std::invalid_argument("sample_level_backward: gradient shape mismatch");

    const int cr = level.cr();
    const int R = level.rank;
    const LineWeights wx = line_weights(double(x), level.nx);
    const LineWeights wy = line_weights(double(y), level.ny);
    const LineWeights wz = line_weights(double(z), level.nz);

    // Interpolated factor values (forward recompute; cheaper than taping).
    Real lx[kMaxCr], ly[kMaxCr], lz[kMaxCr];
    auto lerp_into = [cr](const std::vector<Real>& grid, const LineWeights& w, Real* dst) {
        const Real* a = grid.data() + size_t(w.i0) * cr;
        const Real* b = grid.data() + size_t(w.i1) * cr;
        const Real u0 = Real(w.w0), u1 = Real(w.w1);
        for (int q = 0; q < cr; ++q) dst[q] = u0 * a[q] + u1 * b[q];
    };
    lerp_into(level.line_x, wx, lx);
    lerp_into(level.line_y, wy, ly);
    lerp_into(level.line_z, wz, lz);

    // Broadcast dout over the rank lanes once, then everything below is
    // element-wise and vectorizes.
    Real gv[kMaxCr];
    for (int c = 0; c < level.channels; ++c)
        for (int r = 0; r < R; ++r) gv[c * R + r] = dout[c];

    // d(value)/d(interpolated factor), per cr slot.
    Real dlx[kMaxCr], dly[kMaxCr], dlz[kMaxCr];

    if (!level.has_planes()) {  // CP
        for (int q = 0; q < cr; ++q) {
            dlx[q] = gv[q] * ly[q] * lz[q];
            dly[q] = gv[q] * lx[q] * lz[q];
            dlz[q] = gv[q] * lx[q] * ly[q];
        }
    } else {
        auto bilerp = [cr](const std::vector<Real>& grid, int n2, const LineWeights& wa,
                           const LineWeights& wb, Real* dst) {
            const Real* g00 = grid.data() + (size_t(wa.i0) * n2 + wb.i0) * cr;
            const Real* g01 = grid.data() + (size_t(wa.i0) * n2 + wb.i1) * cr;
            const Real* g10 = grid.data() + (size_t(wa.i1) * n2 + wb.i0) * cr;
            const Real* g11 = grid.data() + (size_t(wa.i1) * n2 + wb.i1) * cr;
            const Real c00 = Real(wa.w0 * wb.w0), c01 = Real(wa.w0 * wb.w1);
            const Real c10 = Real(wa.w1 * wb.w0), c11 = Real(wa.w1 * wb.w1);
            for (int q = 0; q < cr; ++q)
                dst[q] = c00 * g00[q] + c01 * g01[q] + c10 * g10[q] + c11 * g11[q];
        };
        Real pyz[kMaxCr], pxz[kMaxCr], pxy[kMaxCr];
        bilerp(level.plane_yz, level.nz, wy, wz, pyz);
        bilerp(level.plane_xz, level.nz, wx, wz, pxz);
        bilerp(level.plane_xy, level.ny, wx, wy, pxy);

        Real dpyz[kMaxCr], dpxz[kMaxCr], dpxy[kMaxCr];
        for (int q = 0; q < cr; ++q) {
            dlx[q] = gv[q] * pyz[q];
            dly[q] = gv[q] * pxz[q];
            dlz[q] = gv[q] * pxy[q];
            dpyz[q] = gv[q] * lx[q];
            dpxz[q] = gv[q] * ly[q];
            dpxy[q] = gv[q] * lz[q];
        }
        auto scatter_plane = [cr](std::vector<Real>& grid, int n2, const LineWeights& wa,
                                  const LineWeights& wb, const Real* dval) {
            Real* g00 = grid.data() + (size_t(wa.i0) * n2 + wb.i0) * cr;
            Real* g01 = grid.data() + (size_t(wa.i0) * n2 + wb.i1) * cr;
            Real* g10 = grid.data() + (size_t(wa.i1) * n2 + wb.i0) * cr;
            Real* g11 = grid.data() + (size_t(wa.i1) * n2 + wb.i1) * cr;
            const Real c00 = Real(wa.w0 * wb.w0), c01 = Real(wa.w0 * wb.w1);
            const Real c10 = Real(wa.w1 * wb.w0), c11 = Real(wa.w1 * wb.w1);
            for (int q = 0; q < cr; ++q) {
                const Real v = dval[q];
                g00[q] += c00 * v;
                g01[q] += c01 * v;
                g10[q] += c10 * v;
                g11[q] += c11 * v;
            }
        };
        scatter_plane(grads.plane_yz, level.nz, wy, wz, dpyz);
        scatter_plane(grads.plane_xz, level.nz, wx, wz, dpxz);
        scatter_plane(grads.plane_xy, level.ny, wx, wy, dpxy);
    }

    auto scatter_line = [cr](std::vector<Real>& grid, const LineWeights& w, const Real* dval) {
        Real* a = grid.data() + size_t(w.i0) * cr;
        Real* b = grid.data() + size_t(w.i1) * cr;
        const Real u0 = Real(w.w0), u1 = Real(w.w1);
        for (int q = 0; q < cr; ++q) {
            a[q] += u0 * dval[q];
            b[q] += u1 * dval[q];
        }
    };
    scatter_line(grads.line_x, wx, dlx);
    scatter_line(grads.line_y, wy, dly);
    scatter_line(grads.line_z, wz, dlz);
}

template <class Real>
Real sample_vm(const FieldLevel<Real>& level, const Vec3& p, int channel) {
    Real out[64];
    assert(level.channels <= 64);
    sample_level(level, Real(p.x), Real(p.y), Real(p.z), out);
    return out[channel];
}

template <class Real>
Real sample_cp(const FieldLevel<Real>& level, const Vec3& p, int channel) {
    return sample_vm(level, p, channel);
}

template <class Real>
void sample_field(const MultiscaleField<Real>& field, const Vec3& p, Real* out, Real* pre) {
    const int C = field.channels();
    const Real x = Real(p.x), y = Real(p.y), z = Real(p.z);
    if (field.agg == Aggregation::Concat) {
        for (size_t l = 0; l < field.levels.size(); ++l)
            sample_level(field.levels[l], x, y, z, out + l * C);
        return;
    }
    Real acc[64] = {};
    Real tmp[64];
    for (const auto& level : field.levels) {
        sample_level(level, x, y, z, tmp);
        for (int c = 0; c < C; ++c) acc[c] += tmp[c];
    }
    const Real inv_l = Real(1) / Real(field.levels.size());
    for (int c = 0; c < C; ++c) {
        const Real m = acc[c] * inv_l;
        if (pre) pre[c] = m;
        out[c] = activate(field.act, m);
    }
}

template <class Real>
void sample_field_backward(const MultiscaleField<Real>& field, FieldGradients<Real>& grads,
                           const Vec3& p, const Real* dout, const Real* pre) {
    const int C = field.channels();
    const Real x = Real(p.x), y = Real(p.y), z = Real(p.z);
    if (field.agg == Aggregation::Concat) {
        for (size_t l = 0; l < field.levels.size(); ++l)
            sample_level_backward(field.levels[l], grads.levels[l], x, y, z, dout + l * C);
        return;
    }
    Real dmean[64];
    const Real inv_l = Real(1) / Real(field.levels.size());
    for (int c = 0; c < C; ++c) {
        const Real a = activate(field.act, pre[c]);
        dmean[c] = dout[c] * activate_grad(field.act, pre[c], a) * inv_l;
    }
    for (size_t l = 0; l < field.levels.size(); ++l)
        sample_level_backward(field.levels[l], grads.levels[l], x, y, z, dmean);
}

#define STRF_INSTANTIATE(Real)                                                                  \
    template struct FieldLevel<Real>;                                                           \
    template struct MultiscaleField<Real>;                                                      \
    template MultiscaleField<Real> make_field<Real>(Decomp, Aggregation, Activation,            \
                                                    const std::vector<int>&, int, int, Rng&);   \
    template void sample_level<Real>(const FieldLevel<Real>&, Real, Real, Real, Real*);        \
    template void sample_level_backward<Real>(const FieldLevel<Real>&, FieldLevel<Real>&, Real, \
                                              Real, Real, const Real*);                         \
    template Real sample_vm<Real>(const FieldLevel<Real>&, const Vec3&, int);                   \
    template Real sample_cp<Real>(const FieldLevel<Real>&, const Vec3&, int);                   \
    template void sample_field<Real>(const MultiscaleField<Real>&, const Vec3&, Real*, Real*);  \
    template void sample_field_backward<Real>(const MultiscaleField<Real>&,                     \
                                              FieldGradients<Real>&, const Vec3&, const Real*,  \
                                              const Real*);

STRF_INSTANTIATE(float)
STRF_INSTANTIATE(double)
#undef STRF_INSTANTIATE

}  // namespace strf
