// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "strf/losses.hpp"
#include "strf/model.hpp"
#include "strf/params.hpp"

namespace strf {

// One optimization batch: rays with frozen sample sets (so repeated
// evaluations, e.g. finite differencing, see the same integrand), ground
// truth colors, and optional per-ray depth supervision.
struct TrainBatch {
    std::vector<Ray> rays;
    std::vector<RaySampleSet> samples;
    std::vector<std::array<float, 3>> gt;
    std::vector<double> depth_dist;    // per ray; NaN when unsupervised
    std::vector<double> depth_weight;  // per ray; 0 when unsupervised

    size_t size() const { return rays.size(); }
    void resize(size_t n) {
        rays.resize(n);
        samples.resize(n);
        gt.resize(n);
        depth_dist.assign(n, std::numeric_limits<double>::quiet_NaN());
        depth_weight.assign(n, 0.0);
    }
};

// Per-thread scratch reused across steps: ray tapes plus gradient mirrors for
// workers past the first.
template <class Real>
struct DiffWorkspace {
    std::vector<RayTape<Real>> tapes;
    std::vector<Model<Real>> extra_grads;  // threads - 1 entries

    void init(const Model<Real>& model, int n_samples, int max_shaded, int threads);
};

// Full forward (and optionally backward) over a batch. Losses are batch
// means; gradients of the weighted total accumulate into `grads` (which the
// caller zeroes between optimizer steps). Deterministic for a fixed thread
// count: rays are partitioned contiguously and worker buffers merge in order.
// Throws on a non-finite loss component, naming it.
template <class Real>
LossReport forward_backward(const Model<Real>& model, const TrainBatch& batch,
                            const LossWeights& weights, const RenderOptions& opts,
                            DiffWorkspace<Real>& ws, Model<Real>* grads, int threads = 1);

// Forward-only convenience (no gradient accumulation).
template <class Real>
LossReport forward_losses(const Model<Real>& model, const TrainBatch& batch,
                          const LossWeights& weights, const RenderOptions& opts,
                          DiffWorkspace<Real>& ws, int threads = 1);

// Central difference (f(x+eps) - f(x-eps)) / (2 eps) on one parameter slot.
template <class Real>
double finite_difference(const std::function<double()>& loss, Real* param, double eps);

struct GradcheckRow {
    std::string block;
    int checked = 0;
    double max_abs_err = 0;
    double max_rel_err = 0;
    bool pass = true;
};

struct GradcheckResult {
    std::vector<GradcheckRow> rows;
    double max_rel_err = 0;
    double max_abs_err = 0;
    int checked = 0;
    bool pass = true;
};

// Verifies analytic gradients of the total loss against central differences
// on `n_params` randomly selected parameters spread across every block.
// Runs the model in whatever precision Real is; tolerances assume double.
template <class Real>
GradcheckResult gradcheck(Model<Real>& model, const TrainBatch& batch, const LossWeights& weights,
                          const RenderOptions& opts, int n_params, double eps, double tol,
                          uint64_t seed);

}  // namespace strf
