// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "strf/rng.hpp"
#include "strf/vec.hpp"

namespace strf {

enum class Decomp { VM, CP };
enum class Aggregation { Concat, Mean };
enum class Activation { None, Softplus, Sigmoid };

template <class Real>
inline Real activate(Activation a, Real x) {
    switch (a) {
        case Activation::Softplus:
            // log1p(exp(x)) with the standard overflow-safe split.
            return x > Real(30) ? x : std::log1p(std::exp(x));
        case Activation::Sigmoid:
            return Real(1) / (Real(1) + std::exp(-x));
        default:
            return x;
    }
}

template <class Real>
inline Real activate_grad(Activation a, Real x, Real y) {  // y = activate(x)
    switch (a) {
        case Activation::Softplus:
            return Real(1) / (Real(1) + std::exp(-x));
        case Activation::Sigmoid:
            return y * (Real(1) - y);
        default:
            return Real(1);
    }
}

// One resolution level of a factorized 3D field. Line factors are stored
// node-major as [N][C*R] and plane factors as [N1][N2][C*R] so the channel
// x rank inner loop runs over contiguous memory. Planes are empty for CP.
//
// plane_yz is indexed (j, k), plane_xz (i, k), plane_xy (i, j) with i/j/k the
// X/Y/Z node indices; rows of plane_xy are X, columns are Y.
template <class Real>
struct FieldLevel {
    int nx = 0, ny = 0, nz = 0;
    int rank = 0, channels = 0;
    std::vector<Real> line_x, line_y, line_z;
    std::vector<Real> plane_yz, plane_xz, plane_xy;

    int cr() const { return rank * channels; }
    bool has_planes() const { return !plane_yz.empty(); }

    void allocate(Decomp decomp, int nx_, int ny_, int nz_, int rank_, int channels_);
    size_t param_count() const;
};

template <class Real>
struct MultiscaleField {
    Decomp decomp = Decomp::VM;
    Aggregation agg = Aggregation::Mean;
    Activation act = Activation::None;
    std::vector<FieldLevel<Real>> levels;

    int channels() const { return levels.empty() ? 0 : levels[0].channels; }
    int output_dim() const {
        return agg == Aggregation::Concat ? channels() * int(levels.size()) : channels();
    }
    size_t param_count() const {
        size_t n = 0;
        for (const auto& l : levels) n += l.param_count();
        return n;
    }

    // Same-shape zeroed copy, used as the gradient accumulator.
    MultiscaleField<Real> make_gradients() const;
    void zero() {
        for (auto& l : levels)
            for (auto* g : {&l.line_x, &l.line_y, &l.line_z, &l.plane_yz, &l.plane_xz, &l.plane_xy})
                std::fill(g->begin(), g->end(), Real(0));
    }
};

template <class Real>
using FieldGradients = MultiscaleField<Real>;

// Geometric level sizes, N_l = round(base * b^l) with b = (max/base)^(1/(L-1)).
std::vector<int> level_resolutions(int base, int max, int levels);

// Builds a field with the given per-level resolutions (cubic levels) and
// initializes every factor grid ~ Normal(0, 0.1/sqrt(R)).
template <class Real>
MultiscaleField<Real> make_field(Decomp decomp, Aggregation agg, Activation act,
                                 const std::vector<int>& resolutions, int rank, int channels,
                                 Rng& rng);

// Continuous sample of one level: lines linearly interpolated, planes
// bilinearly, clamp-to-edge; out[] receives all C channel values (summed over
// ranks). x, y, z in [0,1].
template <class Real>
void sample_level(const FieldLevel<Real>& level, Real x, Real y, Real z, Real* out);

// Accumulates d(sample_level)/d(factors) * dout into grads (same shapes).
template <class Real>
void sample_level_backward(const FieldLevel<Real>& level, FieldLevel<Real>& grads, Real x, Real y,
                           Real z, const Real* dout);

// Single-channel conveniences matching the per-operation contracts.
template <class Real>
Real sample_vm(const FieldLevel<Real>& level, const Vec3& p, int channel);
template <class Real>
Real sample_cp(const FieldLevel<Real>& level, const Vec3& p, int channel);

// Full multiscale sample. Concat mode writes L*C raw values; mean mode writes
// C values (mean over levels, then the field's activation). When `pre` is
// non-null in mean mode it receives the C pre-activation means.
template <class Real>
void sample_field(const MultiscaleField<Real>& field, const Vec3& p, Real* out,
                  Real* pre = nullptr);

// Backward counterpart; `dout` has output_dim() entries (gradients w.r.t. the
// activated outputs in mean mode, the raw concat values otherwise). `pre`
// must be the values captured in the forward for mean mode.
template <class Real>
void sample_field_backward(const MultiscaleField<Real>& field, FieldGradients<Real>& grads,
                           const Vec3& p, const Real* dout, const Real* pre);

}  // namespace strf
