// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/difftape.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace strf {

namespace {

template <class Real>
void add_field(MultiscaleField<Real>& dst, const MultiscaleField<Real>& src) {
    for (size_t l = 0; l < dst.levels.size(); ++l) {
        auto& d = dst.levels[l];
        const auto& s = src.levels[l];
        std::vector<Real>* dg[6] = {&d.line_x, &d.line_y, &d.line_z,
                                    &d.plane_yz, &d.plane_xz, &d.plane_xy};
        const std::vector<Real>* sg[6] = {&s.line_x, &s.line_y, &s.line_z,
                                          &s.plane_yz, &s.plane_xz, &s.plane_xy};
        for (int g = 0; g < 6; ++g)
            for (size_t q = 0; q < dg[g]->size(); ++q) (*dg[g])[q] += (*sg[g])[q];
    }
}

template <class Real>
void add_mlp(Mlp<Real>& dst, const Mlp<Real>& src) {
    for (size_t l = 0; l < dst.layers.size(); ++l) {
        for (size_t q = 0; q < dst.layers[l].w.size(); ++q)
            dst.layers[l].w[q] += src.layers[l].w[q];
        for (size_t q = 0; q < dst.layers[l].b.size(); ++q)
            dst.layers[l].b[q] += src.layers[l].b[q];
    }
}

template <class Real>
void add_model(Model<Real>& dst, const Model<Real>& src) {
    add_field(dst.sigma_field, src.sigma_field);
    add_field(dst.ref_field, src.ref_field);
    add_field(dst.c_amb_field, src.c_amb_field);
    add_field(dst.lambda_amb_field, src.lambda_amb_field);
    add_mlp(dst.lightfield.head_a, src.lightfield.head_a);
    add_mlp(dst.lightfield.head_b, src.lightfield.head_b);
    add_mlp(dst.lightfield.head_d, src.lightfield.head_d);
}

struct WorkerSums {
    double rgb = 0, normal = 0, lamb = 0, ds = 0;
    std::string error;
};

}  // namespace

template <class Real>
void DiffWorkspace<Real>::init(const Model<Real>& model, int n_samples, int max_shaded,
                               int threads) {
    tapes.resize(threads);
    for (auto& t : tapes) t.reserve(model, n_samples, max_shaded);
    extra_grads.clear();
    for (int t = 1; t < threads; ++t) extra_grads.push_back(model.make_gradients());
}

template <class Real>
LossReport forward_backward(const Model<Real>& model, const TrainBatch& batch,
                            const LossWeights& weights, const RenderOptions& opts,
                            DiffWorkspace<Real>& ws, Model<Real>* grads, int threads) {
    const size_t B = batch.size();
    if (threads < 1) threads = 1;
    if (size_t(threads) > ws.tapes.size())
        throw std::logic_error("forward_backward: workspace built for fewer threads");

    // Depth-ray count fixes the 1/N_ds normalization before any backward.
    size_t n_ds = 0;
    for (size_t r = 0; r < B; ++r)
        if (batch.depth_weight[r] > 0.0) ++n_ds;

    std::vector<WorkerSums> sums(threads);
    const double w_rgb = weights.rgb, w_n = weights.normal, w_l = weights.lamb, w_d = weights.ds;

    auto run_range = [&](int tid, size_t lo, size_t hi) {
        auto& tape = ws.tapes[tid];
        Model<Real>* gout = nullptr;
        if (grads) gout = tid == 0 ? grads : &ws.extra_grads[tid - 1];
        auto& acc = sums[tid];
        for (size_t r = lo; r < hi; ++r) {
            const bool hit = model_ray_forward(model, batch.samples[r], batch.rays[r].dir, opts,
                                               tape);
            double rgb[3];
            if (hit) {
                rgb[0] = double(tape.rgb[0]);
                rgb[1] = double(tape.rgb[1]);
                rgb[2] = double(tape.rgb[2]);
            } else {
                rgb[0] = opts.background.x;
                rgb[1] = opts.background.y;
                rgb[2] = opts.background.z;
            }
            double err = 0;
            for (int c = 0; c < 3; ++c) {
                const double d = rgb[c] - batch.gt[r][c];
                err += d * d;
            }
            const double normal_term = hit ? double(ray_normal_term(tape)) / tape.n_total : 0.0;
            const double lamb_term = hit ? double(ray_lambda_term(tape)) : 0.0;
            double ds_term = 0.0;
            const bool supervised = hit && batch.depth_weight[r] > 0.0;
            double height_err = 0.0;
            if (supervised) {
                height_err = double(tape.height) - batch.depth_dist[r];
                ds_term = batch.depth_weight[r] * height_err * height_err;
            }
            if (!std::isfinite(err) || !std::isfinite(normal_term) || !std::isfinite(lamb_term) ||
                !std::isfinite(ds_term)) {
                if (acc.error.empty())
                    acc.error = "non-finite loss at ray " + std::to_string(r) + " (pixel " +
                                std::to_string(batch.rays[r].row) + "," +
                                std::to_string(batch.rays[r].col) + ")";
                return;
            }
            acc.rgb += err;
            acc.normal += normal_term;
            acc.lamb += lamb_term;
            acc.ds += ds_term;

            if (gout && hit) {
                Real d_rgb[3];
                for (int c = 0; c < 3; ++c)
                    d_rgb[c] = Real(w_rgb / double(B) * 2.0 * (rgb[c] - batch.gt[r][c]));
                const Real d_height =
                    supervised ? Real(w_d / double(n_ds) * batch.depth_weight[r] * 2.0 * height_err)
                               : Real(0);
                const Real g_normal = Real(w_n / (double(B) * tape.n_total));
                const Real g_lamb = Real(w_l / double(B));
                model_ray_backward(model, tape, d_rgb, d_height, g_normal, g_lamb, *gout);
            }
        }
    };

    if (threads == 1) {
        run_range(0, 0, B);
    } else {
        if (grads)
            for (auto& g : ws.extra_grads) g.zero_params();
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            const size_t lo = B * size_t(t) / threads;
            const size_t hi = B * size_t(t + 1) / threads;
            pool.emplace_back(run_range, t, lo, hi);
        }
        for (auto& th : pool) th.join();
        if (grads)
            for (auto& g : ws.extra_grads) add_model(*grads, g);
    }

    for (const auto& s : sums)
        if (!s.error.empty()) throw std::runtime_error("forward_backward: " + s.error);

    LossReport report;
    for (const auto& s : sums) {
        report.rgb += s.rgb;
        report.normal += s.normal;
        report.lamb += s.lamb;
        report.ds += s.ds;
    }
    if (B > 0) {
        report.rgb /= double(B);
        report.normal /= double(B);
        report.lamb /= double(B);
    }
    if (n_ds > 0) report.ds /= double(n_ds);

    report.tv = weights.tv != 0.0 ? loss_tv(model.sigma_field, weights.tv_all_planes) : 0.0;
    report.l1 = weights.l1 != 0.0 ? loss_l1(model.sigma_field) : 0.0;
    if (grads) {
        loss_tv_backward(model.sigma_field, grads->sigma_field, Real(weights.tv),
                         weights.tv_all_planes);
        loss_l1_backward(model.sigma_field, grads->sigma_field, Real(weights.l1));
    }
    report.total = total_loss(report, weights);
    return report;
}

template <class Real>
LossReport forward_losses(const Model<Real>& model, const TrainBatch& batch,
                          const LossWeights& weights, const RenderOptions& opts,
                          DiffWorkspace<Real>& ws, int threads) {
    return forward_backward(model, batch, weights, opts, ws, static_cast<Model<Real>*>(nullptr), threads);
}

template <class Real>
double finite_difference(const std::function<double()>& loss, Real* param, double eps) {
    if (!(eps > 0)) throw std::invalid_argument("finite_difference: eps must be positive");
    const Real orig = *param;
    *param = Real(double(orig) + eps);
    const double fp = loss();
    *param = Real(double(orig) - eps);
    const double fm = loss();
    *param = orig;
    return (fp - fm) / (2.0 * eps);
}

template <class Real>
GradcheckResult gradcheck(Model<Real>& model, const TrainBatch& batch, const LossWeights& weights,
                          const RenderOptions& opts, int n_params, double eps, double tol,
                          uint64_t seed) {
    Model<Real> grads = model.make_gradients();
    DiffWorkspace<Real> ws;
    ws.init(model, opts.n_samples, opts.max_shaded, 1);
    forward_backward(model, batch, weights, opts, ws, &grads, 1);

    ParamRegistry<Real> registry(&model, &grads);
    const auto& blocks = registry.blocks();

    GradcheckResult result;
    result.rows.resize(blocks.size());
    for (size_t b = 0; b < blocks.size(); ++b) result.rows[b].block = blocks[b].name;

    Rng rng(seed, 0x9dc);
    auto loss_fn = [&]() { return forward_losses(model, batch, weights, opts, ws, 1).total; };

    for (int k = 0; k < n_params; ++k) {
        const size_t bi = size_t(k) % blocks.size();
        const auto& block = blocks[bi];
        const size_t idx = rng.below(uint32_t(block.size));
        const double fd = finite_difference(loss_fn, block.values + idx, eps);
        const double an = double(block.grads[idx]);
        const double abs_err = std::abs(an - fd);
        const double denom = std::max({std::abs(an), std::abs(fd), 1e-8});
        const double rel_err = abs_err / denom;

        auto& row = result.rows[bi];
        row.checked += 1;
        row.max_abs_err = std::max(row.max_abs_err, abs_err);
        row.max_rel_err = std::max(row.max_rel_err, rel_err);
        const bool ok = abs_err < 1e-9 || rel_err < tol;
        row.pass = row.pass && ok;
        result.pass = result.pass && ok;
        result.max_abs_err = std::max(result.max_abs_err, abs_err);
        if (!(abs_err < 1e-9)) result.max_rel_err = std::max(result.max_rel_err, rel_err);
        result.checked += 1;
    }
    return result;
}

#define STRF_INSTANTIATE(Real)                                                                \
    template struct DiffWorkspace<Real>;                                                      \
    template LossReport forward_backward<Real>(const Model<Real>&, const TrainBatch&,         \
                                               const LossWeights&, const RenderOptions&,      \
                                               DiffWorkspace<Real>&, Model<Real>*, int);      \
    template LossReport forward_losses<Real>(const Model<Real>&, const TrainBatch&,           \
                                             const LossWeights&, const RenderOptions&,        \
                                             DiffWorkspace<Real>&, int);                      \
    template double finite_difference<Real>(const std::function<double()>&, Real*, double);   \
    template GradcheckResult gradcheck<Real>(Model<Real>&, const TrainBatch&,                 \
                                             const LossWeights&, const RenderOptions&, int,   \
                                             double, double, uint64_t);

STRF_INSTANTIATE(float)
STRF_INSTANTIATE(double)
#undef STRF_INSTANTIATE

}  // namespace strf
