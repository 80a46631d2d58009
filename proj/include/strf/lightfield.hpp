// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "strf/mlp.hpp"
#include "strf/vec.hpp"

namespace strf {

// Fixed anisotropic-lobe frames on the unit sphere: lobe axis plus two
// orthogonal tangents carrying the bandwidths. Axes come from a Fibonacci
// lattice; tangents from Gram-Schmidt against +Z with an +X pole fallback.
struct AsgGeometry {
    std::vector<Vec3> axis, tan_l, tan_m;

    int n_lobes() const { return int(axis.size()); }
    static AsgGeometry fibonacci(int n);
    void validate() const;  // pairwise orthonormal within 1e-9
};

// Per-point ASG parameters over a shared geometry: one feature vector and two
// positive bandwidths per lobe.
template <class Real>
struct AsgBank {
    const AsgGeometry* geom = nullptr;
    int feature_dim = 0;
    std::vector<Real> features;  // [n_lobes][feature_dim]
    std::vector<Real> lambda;    // n_lobes, > 0
    std::vector<Real> mu;        // n_lobes, > 0
};

// F_s(w_o) = sum_i F_i * max(w_o.axis_i, 0) * exp(-lambda_i (w_o.tl_i)^2
//                                                 - mu_i (w_o.tm_i)^2).
// `lobe_tape`, when given, records per lobe (dot_a, dot_l, dot_m, G) for the
// backward pass (4 * n_lobes reals).
template <class Real>
void asg_encode(const AsgGeometry& geom, const Real* features, const Real* lambda, const Real* mu,
                int feature_dim, const Real omega[3], Real* out, Real* lobe_tape = nullptr);

template <class Real>
void asg_encode_backward(const AsgGeometry& geom, const Real* features, int feature_dim,
                         const Real* lobe_tape, const Real* dout, Real* dfeatures, Real* dlambda,
                         Real* dmu);

// Convenience wrapper over a bank.
template <class Real>
std::vector<Real> asg_encode(const Vec3& omega, const AsgBank<Real>& bank);

inline int sh_basis_size(int degree) { return (degree + 1) * (degree + 1); }

// Real spherical-harmonics basis values for a unit direction, degrees 0..3.
template <class Real>
void sh_basis(const Real dir[3], int degree, Real* out);

// Ablation decoder: per-channel dot of learned coefficients with the basis,
// sigmoid-squashed. coefficients laid out [3][basis_size].
template <class Real>
std::array<Real, 3> sh_encode(const Vec3& omega, int degree, const Real* coefficients);

enum class DecoderKind { Asg, Sh };

// The reflective light field: shared trunk A, ASG-parameter head B (or SH
// coefficient head in the ablation), fixed lobe geometry, specular decoder D.
template <class Real>
struct Lightfield {
    Mlp<Real> head_a;  // feature -> [c_d(3), lambda_s, n_raw(3)] (pre-sigmoid)
    Mlp<Real> head_b;  // last hidden of A -> ASG params | SH coefficients
    Mlp<Real> head_d;  // [F_s, cos_nd] -> c_s (pre-sigmoid)
    AsgGeometry geom;
    int feature_dim = 0;  // D_f
    DecoderKind decoder = DecoderKind::Asg;
    int sh_degree = 3;
    bool lambertian = false;

    int input_dim() const { return head_a.input_dim(); }
    // Scratch floats needed by one point evaluation.
    int tape_size() const;
};

template <class Real>
Lightfield<Real> make_lightfield(int feature_in, int head_a_layers, int head_a_width,
                                 int head_bd_width, int n_lobes, int feature_dim,
                                 DecoderKind decoder, int sh_degree, bool lambertian, Rng& rng);

// Final per-point surface quantities (sigmoid outputs where contracted).
template <class Real>
struct SurfacePoint {
    Real c_d[3];
    Real lambda_s;
    Real n[3];
    Real inv_norm;  // 1/||n_raw||, 0 when the fallback normal was used
    bool normal_fallback;
    Real cos_nd;
    Real c_s[3];
    Real c_ref[3];
};

// Evaluates the light field at one sample: feature vector (head A input) and
// unit viewing direction. Records everything backward needs into `tape`.
template <class Real>
void lightfield_eval(const Lightfield<Real>& lf, const Real* feature, const Real dir[3],
                     Real* tape, SurfacePoint<Real>& out);

// Backward. d_cref is dL/dc_ref, d_cosnd_extra the gradient injected directly
// on cos_nd (the orientation loss), d_n_extra an optional extra gradient on
// the unit normal. Parameter gradients accumulate into `grads`; d_feature
// (input_dim) is accumulated when non-null.
template <class Real>
void lightfield_backward(const Lightfield<Real>& lf, const Real* tape,
                         const SurfacePoint<Real>& pt, const Real dir[3], const Real d_cref[3],
                         Real d_cosnd_extra, Lightfield<Real>& grads, Real* d_feature);

}  // namespace strf
