// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "strf/geometry.hpp"
#include "strf/lightfield.hpp"
#include "strf/tensor_field.hpp"

namespace strf {

// The four tensor fields plus the reflective light field. Template parameter
// selects the working precision (double for verification, float for training).
template <class Real>
struct Model {
    MultiscaleField<Real> sigma_field;       // density, mean/softplus, C=4
    MultiscaleField<Real> ref_field;         // reflectance features, concat
    MultiscaleField<Real> c_amb_field;       // ambient color, single level, C=3
    MultiscaleField<Real> lambda_amb_field;  // ambient factor, single level, C=2
    Lightfield<Real> lightfield;
    SceneBounds bounds;

    // Shape-identical zeroed copy used as the gradient accumulator.
    Model<Real> make_gradients() const;
    void zero_params();

    size_t param_count() const;
};

// Per-ray evaluation controls. Cutoffs of zero disable early termination and
// appearance culling, giving the exact compositing sum.
struct RenderOptions {
    int n_samples = 64;
    bool stratified = false;
    Vec3 background{0, 0, 0};
    double weight_cutoff = 0.0;  // appearance evaluated where w >= cutoff
    int max_shaded = 0;          // cap on appearance evaluations per ray, 0 = all
    double tr_cutoff = 0.0;      // stop marching once transmittance drops below
};

// Everything the backward pass (and the loss terms) need about one ray.
// Buffers are preallocated once and reused across rays.
template <class Real>
struct RayTape {
    int n_total = 0;    // samples requested along the ray
    int n_marched = 0;  // samples actually evaluated (early termination)
    int c_sigma = 0;

    std::vector<Vec3> pos;       // [n] normalized positions
    std::vector<Real> t, delta;  // [n]
    std::vector<Real> sig_pre;   // [n][c_sigma] pre-activation level means
    std::vector<Real> sigma;     // [n]
    std::vector<Real> trans_e;   // [n] exp(-tau_i)
    std::vector<Real> alpha;     // [n]
    std::vector<Real> tr;        // [n] transmittance before sample i
    std::vector<Real> w;         // [n] render weights
    std::vector<Real> lamb_pre;  // [n][2]
    std::vector<Real> lamb;      // [n] ambient factor

    std::vector<int> shaded;                  // sample indices with appearance
    std::vector<Real> camb_pre;               // [K][3] ambient color, shaded only
    std::vector<Real> camb;                   // [K][3]
    std::vector<Real> feat;                   // [K][feat_dim]
    std::vector<Real> lf_tape;                // [K][lightfield tape]
    std::vector<SurfacePoint<Real>> points;   // [K]
    std::vector<Real> irradiance;             // [K][3]
    std::vector<Real> color;                  // [K][3]

    Real dir[3] = {0, 0, 0};
    Real rgb[3] = {0, 0, 0};
    Real wsum = 0;
    Real height = 0;
    bool miss = false;

    void reserve(const Model<Real>& model, int n_samples, int max_shaded);
};

// Marches one sampled ray through the model. Returns false (miss) when the
// sample set is empty; the caller paints background.
template <class Real>
bool model_ray_forward(const Model<Real>& model, const RaySampleSet& samples, const Vec3& dir,
                       const RenderOptions& opts, RayTape<Real>& tape);

// Accumulates d(total)/d(params) for one ray into `grads`, given the upstream
// gradients of the ray-level outputs and the per-ray regularizer scales:
//   d_rgb        dL/d(rendered rgb)
//   d_height     dL/d(rendered height)
//   g_normal     scale on sum_shaded w_i * max(0, cos_nd)^2
//   g_lamb       scale on sum_i (Tr_i - lamb_i)^2 + 1 - sum_i w_i lamb_i
template <class Real>
void model_ray_backward(const Model<Real>& model, const RayTape<Real>& tape, const Real d_rgb[3],
                        Real d_height, Real g_normal, Real g_lamb, Model<Real>& grads);

// Per-ray loss building blocks read off a forward tape.
template <class Real>
Real ray_normal_term(const RayTape<Real>& tape);  // sum_shaded w * max(0, cos)^2
template <class Real>
Real ray_lambda_term(const RayTape<Real>& tape);  // the Eq-style ambient term

}  // namespace strf
