// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "strf/checkpoint.hpp"
#include "strf/data.hpp"
#include "strf/difftape.hpp"
#include "strf/metrics.hpp"
#include "strf/trainer.hpp"

namespace fs = std::filesystem;
using namespace strf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Dataset load_dataset_checked(const std::string& dir) {
    try {
        return load_dataset(dir);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
}

template <class Real>
int run_train(const Config& cfg, const std::string& data_dir, const std::string& out_dir) {
    const Dataset dataset = load_dataset_checked(data_dir);
    const TrainOutcome outcome = train_model<Real>(cfg, dataset, out_dir);
    for (const auto& [step, v] : outcome.val_history)
        std::printf("val step %lld psnr %.3f\n", static_cast<long long>(step), v);
    if (!outcome.ok) {
        std::fprintf(stderr, "training aborted: %s\nlast good checkpoint: %s\n",
                     outcome.error.c_str(), outcome.final_ckpt.c_str());
        return kExitNumeric;
    }
    std::printf("done: %lld steps, checkpoint %s\n", static_cast<long long>(outcome.steps_done),
                outcome.final_ckpt.c_str());
    return kExitOk;
}

int cmd_train(const std::string& config_path, std::string data_dir, const std::string& out_dir) {
    const Config cfg = load_config(config_path);
    if (data_dir.empty()) data_dir = cfg.data_dir;
    if (data_dir.empty()) throw DataError("train: no dataset (set data.dir or --data)");
    return cfg.precision == "f64" ? run_train<double>(cfg, data_dir, out_dir)
                                  : run_train<float>(cfg, data_dir, out_dir);
}

template <class Real>
int run_render(const std::string& ckpt_path, const std::string& view, const std::string& data_dir,
               const std::string& out_dir) {
    auto ck = load_checkpoint<Real>(ckpt_path);
    CameraVariant cam;
    if (!view.empty() && view.find_first_not_of("0123456789") == std::string::npos) {
        if (data_dir.empty()) throw DataError("render: integer --view needs --data");
        const Dataset ds = load_dataset_checked(data_dir);
        const int v = std::stoi(view);
        if (v < 0 || v >= int(ds.views.size())) throw DataError("render: view id out of range");
        cam = ds.views[v].camera;
    } else if (view.size() > 4 && view.substr(view.size() - 4) == ".rpc") {
        cam = load_rpc(view);
    } else if (view.size() > 4 && view.substr(view.size() - 4) == ".cam") {
        cam = load_pinhole(view);
    } else {
        throw DataError("render: --view must be an id, a .cam file or an .rpc file");
    }

    fs::create_directories(out_dir);
    RenderOptions opts = exact_render_options(ck.config);
    const RenderResult result = render_image(ck.model, cam, ck.model.bounds, opts);
    save_ppm(result.rgb, out_dir + "/render.ppm");
    save_pgm16(result.altitude, result.rgb.width, result.rgb.height, 0.0,
               (ck.model.bounds.max - ck.model.bounds.min).norm() * 2.0,
               out_dir + "/altitude.pgm");
    save_pgm16(result.opacity, result.rgb.width, result.rgb.height, 0.0, 1.0,
               out_dir + "/opacity.pgm");
    std::printf("wrote %s/render.ppm (+altitude, opacity)\n", out_dir.c_str());
    return kExitOk;
}

int cmd_render(const std::string& ckpt, const std::string& view, const std::string& data_dir,
               const std::string& out_dir) {
    const Config cfg = peek_checkpoint_config(ckpt);
    return cfg.precision == "f64" ? run_render<double>(ckpt, view, data_dir, out_dir)
                                  : run_render<float>(ckpt, view, data_dir, out_dir);
}

template <class Real>
int run_eval(const std::string& ckpt_path, const std::string& data_dir, const std::string& split,
             const std::string& out_path) {
    auto ck = load_checkpoint<Real>(ckpt_path);
    const Dataset ds = load_dataset_checked(data_dir);
    const RenderOptions opts = exact_render_options(ck.config);
    const auto rows =
        evaluate_split(ck.model, ds, split == "test", opts, ck.config.render_dsm_opacity);
    write_metrics_csv(rows, out_path);
    for (const auto& r : rows)
        std::printf("view %d psnr %.3f ssim %.4f mae %.4f\n", r.view, r.psnr, r.ssim, r.mae);
    std::printf("wrote %s\n", out_path.c_str());
    return kExitOk;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, const std::string& split,
             const std::string& out_path) {
    const Config cfg = peek_checkpoint_config(ckpt);
    return cfg.precision == "f64" ? run_eval<double>(ckpt, data_dir, split, out_path)
                                  : run_eval<float>(ckpt, data_dir, split, out_path);
}

template <class Real>
int run_dsm(const std::string& ckpt_path, const std::string& data_dir, double cellsize, int view,
            const std::string& out_path) {
    auto ck = load_checkpoint<Real>(ckpt_path);
    const Dataset ds = load_dataset_checked(data_dir);
    if (view < 0) view = ds.test_views.empty() ? 0 : *ds.test_views.begin();
    if (view >= int(ds.views.size())) throw DataError("dsm: view id out of range");
    const RenderOptions opts = exact_render_options(ck.config);
    const RenderResult rendered = render_image(ck.model, ds.views[view].camera, ds.bounds, opts);
    const Dsm dsm = dsm_from_altitude(rendered, ds.views[view].camera, ds.bounds, cellsize,
                                      ck.config.render_dsm_opacity);
    save_dsm_ascii(dsm, out_path);
    std::printf("wrote %s (%dx%d cells)\n", out_path.c_str(), dsm.ncols, dsm.nrows);
    return kExitOk;
}

int cmd_dsm(const std::string& ckpt, const std::string& data_dir, double cellsize, int view,
            const std::string& out_path) {
    const Config cfg = peek_checkpoint_config(ckpt);
    return cfg.precision == "f64" ? run_dsm<double>(ckpt, data_dir, cellsize, view, out_path)
                                  : run_dsm<float>(ckpt, data_dir, cellsize, view, out_path);
}

// Gradient verification runs in double regardless of the configured training
// precision; tolerances are double-mode tolerances.
int cmd_gradcheck(const std::string& config_path, int n_params, double eps, double tol) {
    Config cfg = load_config(config_path);
    const SceneBounds bounds{{0, 0, 0}, {4, 4, 2}};
    Model<double> model = build_model<double>(cfg, bounds);

    RenderOptions opts;
    opts.n_samples = std::min(cfg.render_n_samples, 32);
    opts.stratified = false;
    // Exact path: no culling, no early termination, so the loss is smooth.
    opts.weight_cutoff = 0.0;
    opts.max_shaded = 0;
    opts.tr_cutoff = 0.0;

    Rng rng(cfg.seed, 51);
    TrainBatch batch;
    batch.resize(2);
    for (int k = 0; k < 2; ++k) {
        Ray ray;
        ray.origin = {rng.uniform(0.5, 3.5), rng.uniform(0.5, 3.5), 6.0};
        const Vec3 target{rng.uniform(1.0, 3.0), rng.uniform(1.0, 3.0), rng.uniform(0.2, 1.0)};
        ray.dir = (target - ray.origin).normalized();
        batch.rays[k] = ray;
        batch.samples[k] = sample_along_ray(ray, bounds, opts.n_samples, false, rng);
        batch.gt[k] = {float(rng.uniform()), float(rng.uniform()), float(rng.uniform())};
    }
    batch.depth_dist[0] = 5.0;
    batch.depth_weight[0] = 0.7;

    const auto result =
        gradcheck(model, batch, loss_weights(cfg), opts, n_params, eps, tol, cfg.seed);
    std::printf("%-40s %8s %14s %14s  %s\n", "block", "checked", "max_abs_err", "max_rel_err",
                "status");
    for (const auto& row : result.rows)
        std::printf("%-40s %8d %14.3e %14.3e  %s\n", row.block.c_str(), row.checked,
                    row.max_abs_err, row.max_rel_err, row.pass ? "pass" : "FAIL");
    std::printf("total checked %d, max rel err %.3e -> %s\n", result.checked, result.max_rel_err,
                result.pass ? "PASS" : "FAIL");
    return result.pass ? kExitOk : kExitNumeric;
}

int cmd_synth(const SynthParams& params, const std::string& out_dir) {
    synthesize_dataset(params, out_dir);
    std::printf("wrote dataset to %s (%d views)\n", out_dir.c_str(), params.n_views);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"strf: multiscale tensor radiance fields with a reflective light field"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "train a model from a config");
    std::string train_config, train_data, train_out = "run";
    train->add_option("--config", train_config, "config file")->required();
    train->add_option("--data", train_data, "dataset directory (overrides data.dir)");
    train->add_option("--out", train_out, "output directory");

    // render
    auto* render = app.add_subcommand("render", "render a view from a checkpoint");
    std::string render_ckpt, render_view, render_data, render_out = "render_out";
    render->add_option("--ckpt", render_ckpt, "checkpoint file")->required();
    render->add_option("--view", render_view, "view id, .cam file or .rpc file")->required();
    render->add_option("--data", render_data, "dataset directory (for integer view ids)");
    render->add_option("--out", render_out, "output directory");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    std::string eval_ckpt, eval_data, eval_split = "test", eval_out = "metrics.csv";
    eval->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--split", eval_split, "test|train")
        ->check(CLI::IsMember({"test", "train"}));
    eval->add_option("--out", eval_out, "metrics csv path");

    // dsm
    auto* dsm = app.add_subcommand("dsm", "extract a surface grid from a checkpoint");
    std::string dsm_ckpt, dsm_data, dsm_out = "dsm.asc";
    double dsm_cellsize = 0.125;
    int dsm_view = -1;
    dsm->add_option("--ckpt", dsm_ckpt, "checkpoint file")->required();
    dsm->add_option("--data", dsm_data, "dataset directory")->required();
    dsm->add_option("--cellsize", dsm_cellsize, "cell size in scene units")->required();
    dsm->add_option("--view", dsm_view, "view id (default: first test view)");
    dsm->add_option("--out", dsm_out, "output path");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "verify analytic gradients vs finite differences");
    std::string gc_config;
    int gc_params = 200;
    double gc_eps = 1e-4, gc_tol = 1e-4;
    gc->add_option("--config", gc_config, "config file")->required();
    gc->add_option("--params", gc_params, "number of parameters to probe");
    gc->add_option("--eps", gc_eps, "central-difference step");
    gc->add_option("--tol", gc_tol, "relative-error tolerance");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic multi-view dataset");
    SynthParams sp;
    std::string synth_out;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", sp.seed, "scene seed");
    synth->add_option("--views", sp.n_views, "number of views");
    synth->add_option("--size", sp.image_size, "image width/height");
    synth->add_option("--test-views", sp.test_views, "views held out from the end");
    synth->add_option("--cam", sp.cam_kind, "pinhole|rpc")
        ->check(CLI::IsMember({"pinhole", "rpc"}));
    synth->add_option("--transients", sp.transients_per_view, "transient rectangles per view");
    synth->add_flag("--tints", sp.tints, "per-view radiometric tints");
    synth->add_option("--tint-strength", sp.tint_strength, "tint strength in [0,1]");
    synth->add_option("--ks", sp.scene.k_specular, "specular strength");
    synth->add_option("--shininess", sp.scene.shininess, "specular exponent");
    synth->add_option("--roughness", sp.scene.roughness, "terrain roughness in [0,1]");
    synth->add_option("--depth-points", sp.depth_points, "sparse depth point count");
    synth->add_option("--depth-noise", sp.depth_noise, "depth noise sigma");
    synth->add_option("--cellsize", sp.dsm_cellsize, "reference DSM cell size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train) return cmd_train(train_config, train_data, train_out);
        if (*render) return cmd_render(render_ckpt, render_view, render_data, render_out);
        if (*eval) return cmd_eval(eval_ckpt, eval_data, eval_split, eval_out);
        if (*dsm) return cmd_dsm(dsm_ckpt, dsm_data, dsm_cellsize, dsm_view, dsm_out);
        if (*gc) return cmd_gradcheck(gc_config, gc_params, gc_eps, gc_tol);
        if (*synth) return cmd_synth(sp, synth_out);
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
