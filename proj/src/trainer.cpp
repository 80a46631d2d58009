// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "strf/metrics.hpp"

namespace fs = std::filesystem;

namespace strf {

namespace {

struct PixelRef {
    int view, row, col;
};

template <class Real>
double validation_psnr(const Model<Real>& model, const Dataset& ds, const RenderOptions& opts) {
    double acc = 0.0;
    int n = 0;
    for (int v : ds.test_views) {
        const RenderResult rendered = render_image(model, ds.views[v].camera, ds.bounds, opts);
        acc += psnr(rendered.rgb, ds.views[v].gt);
        ++n;
    }
    return n > 0 ? acc / n : 0.0;
}

}  // namespace

template <class Real>
TrainOutcome train_model(const Config& cfg, const Dataset& dataset, const std::string& out_dir) {
    fs::create_directories(out_dir);
    TrainOutcome outcome;
    outcome.final_ckpt = out_dir + "/model.ckpt";
    outcome.best_ckpt = out_dir + "/best.ckpt";
    outcome.csv_path = out_dir + "/losses.csv";

    Model<Real> model = build_model<Real>(cfg, dataset.bounds);
    Model<Real> grads = model.make_gradients();
    ParamRegistry<Real> registry(&model, &grads);
    AdamState<Real> adam;
    adam.init(registry);
    const LrSchedule schedule{cfg.optim_lr_tensor, cfg.optim_lr_mlp, cfg.optim_steps,
                              cfg.optim_lr_floor};
    const LossWeights weights = loss_weights(cfg);
    const RenderOptions train_opts = train_render_options(cfg);
    RenderOptions val_opts = train_opts;
    val_opts.stratified = false;

    DiffWorkspace<Real> ws;
    ws.init(model, train_opts.n_samples, train_opts.max_shaded, cfg.threads);

    // Training pixel pool, reshuffled each epoch.
    std::vector<PixelRef> pool;
    for (int v : dataset.train_view_ids()) {
        const auto& img = dataset.views[v].gt;
        for (int r = 0; r < img.height; ++r)
            for (int c = 0; c < img.width; ++c) pool.push_back({v, r, c});
    }
    if (pool.empty()) throw std::runtime_error("train: dataset has no training pixels");

    std::ofstream csv(outcome.csv_path);
    csv << "step,rgb,tv,normal,lamb,ds,total,lr_tensor,lr_mlp\n";
    csv.precision(10);

    const std::string config_text = serialize_config(cfg);
    TrainBatch batch;
    batch.resize(cfg.optim_batch);

    size_t cursor = 0;
    int64_t epoch = 0;
    auto reshuffle = [&]() {
        Rng shuffle_rng(Rng::mix(cfg.seed, uint64_t(epoch), 0xEA0C), 41);
        for (size_t i = pool.size(); i > 1; --i)
            std::swap(pool[i - 1], pool[shuffle_rng.below(uint32_t(i))]);
        cursor = 0;
        ++epoch;
    };
    reshuffle();

    double best_psnr = -1.0;
    auto run_validation = [&](int64_t step) {
        const double v = validation_psnr(model, dataset, val_opts);
        outcome.val_history.emplace_back(step, v);
        if (v > best_psnr) {
            best_psnr = v;
            save_checkpoint(outcome.best_ckpt, model, config_text, step);
        }
        save_checkpoint(outcome.final_ckpt, model, config_text, step);
        return v;
    };

    if (!dataset.test_views.empty()) run_validation(0);

    for (int step = 0; step < cfg.optim_steps; ++step) {
        // Assemble the batch (without replacement within an epoch).
        for (int k = 0; k < cfg.optim_batch; ++k) {
            if (cursor >= pool.size()) reshuffle();
            const PixelRef px = pool[cursor++];
            const auto& view = dataset.views[px.view];
            Ray ray = camera_ray(view.camera, px.row, px.col, dataset.bounds);
            Rng jitter(Rng::mix(cfg.seed, uint64_t(step) << 22 | uint64_t(k), 0x5A11), 3);
            batch.rays[k] = ray;
            batch.samples[k] = sample_along_ray(ray, dataset.bounds, train_opts.n_samples,
                                                train_opts.stratified, jitter);
            const float* gt = view.gt.px(px.row, px.col);
            batch.gt[k] = {gt[0], gt[1], gt[2]};
            const auto depth = dataset.depth_at(px.view, px.row, px.col);
            if (depth && weights.ds > 0) {
                batch.depth_dist[k] = depth->first;
                batch.depth_weight[k] = depth->second;
            } else {
                batch.depth_dist[k] = std::numeric_limits<double>::quiet_NaN();
                batch.depth_weight[k] = 0.0;
            }
        }

        grads.zero_params();
        LossReport report;
        try {
            report = forward_backward(model, batch, weights, train_opts, ws, &grads, cfg.threads);
            const auto [lr_t, lr_m] = lr_at(schedule, step);
            adam_step(registry, adam, lr_t, lr_m);
            csv << step << "," << report.rgb << "," << report.tv << "," << report.normal << ","
                << report.lamb << "," << report.ds << "," << report.total << "," << lr_t << ","
                << lr_m << "\n";
        } catch (const std::runtime_error& e) {
            outcome.ok = false;
            outcome.error = e.what();
            outcome.steps_done = step;
            return outcome;  // last written checkpoint stays as the good state
        }

        if (!dataset.test_views.empty() && (step + 1) % cfg.train_val_every == 0)
            run_validation(step + 1);
        outcome.steps_done = step + 1;
    }

    save_checkpoint(outcome.final_ckpt, model, config_text, cfg.optim_steps);
    if (dataset.test_views.empty())
        save_checkpoint(outcome.best_ckpt, model, config_text, cfg.optim_steps);
    else if (outcome.val_history.empty() ||
             outcome.val_history.back().first != cfg.optim_steps)
        run_validation(cfg.optim_steps);
    outcome.best_val_psnr = best_psnr;
    return outcome;
}

template <class Real>
std::vector<EvalRow> evaluate_split(const Model<Real>& model, const Dataset& dataset,
                                    bool test_split, const RenderOptions& opts,
                                    double dsm_opacity_threshold) {
    std::vector<EvalRow> rows;
    Dsm truth;
    bool have_truth = false;
    if (!dataset.true_dsm_path.empty() && fs::exists(dataset.true_dsm_path)) {
        truth = load_dsm_ascii(dataset.true_dsm_path);
        have_truth = true;
    }
    for (int v = 0; v < int(dataset.views.size()); ++v) {
        if (test_split != (dataset.test_views.count(v) > 0)) continue;
        const RenderResult rendered =
            render_image(model, dataset.views[v].camera, dataset.bounds, opts);
        EvalRow row;
        row.view = v;
        row.psnr = psnr(rendered.rgb, dataset.views[v].gt);
        row.ssim = ssim(rendered.rgb, dataset.views[v].gt);
        row.mae = std::numeric_limits<double>::quiet_NaN();
        if (have_truth) {
            const Dsm pred = dsm_from_altitude(rendered, dataset.views[v].camera, dataset.bounds,
                                               truth.cellsize, dsm_opacity_threshold);
            try {
                row.mae = altitude_mae(pred, truth);
            } catch (const std::runtime_error&) {
                // no jointly valid cells; leave NaN
            }
        }
        rows.push_back(row);
    }
    return rows;
}

void write_metrics_csv(const std::vector<EvalRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("metrics: cannot write " + path);
    out << "view,psnr,ssim,mae\n";
    out.precision(10);
    for (const auto& r : rows) out << r.view << "," << r.psnr << "," << r.ssim << "," << r.mae << "\n";
}

template TrainOutcome train_model<float>(const Config&, const Dataset&, const std::string&);
template TrainOutcome train_model<double>(const Config&, const Dataset&, const std::string&);
template std::vector<EvalRow> evaluate_split<float>(const Model<float>&, const Dataset&, bool,
                                                    const RenderOptions&, double);
template std::vector<EvalRow> evaluate_split<double>(const Model<double>&, const Dataset&, bool,
                                                     const RenderOptions&, double);

}  // namespace strf
