// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "strf/losses.hpp"
#include "strf/model.hpp"
#include "strf/rng.hpp"

namespace strf {

// Flat `key = value` configuration with dotted section names. Parsing rejects
// unknown keys and out-of-range values.
struct Config {
    uint64_t seed = 42;
    int threads = 1;
    std::string precision = "f32";  // f32 | f64
    std::string data_dir;

    std::string field_decomp = "vm";  // vm | cp
    int field_levels = 8;
    int field_rank = 4;
    int field_channels = 4;
    int field_base_res = 16;
    int field_max_res = 48;
    int ambient_res = 24;
    int ambient_rank = 2;

    int lf_head_a_layers = 2;
    int lf_head_a_width = 128;
    int lf_head_bd_width = 32;
    int lf_lobes = 8;
    int lf_feature_dim = 8;
    std::string lf_decoder = "asg";  // asg | sh
    int lf_sh_degree = 3;
    bool lf_lambertian = false;

    int render_n_samples = 64;
    bool render_stratified = true;
    Vec3 render_background{0, 0, 0};
    double render_weight_cutoff = 1e-3;
    int render_max_shaded = 6;
    double render_tr_cutoff = 1e-4;
    double render_dsm_opacity = 0.5;

    LossWeights loss;

    double optim_lr_tensor = 2e-4;
    double optim_lr_mlp = 1e-4;
    int optim_steps = 5000;
    int optim_batch = 8192;
    double optim_lr_floor = 0.1;
    int train_val_every = 500;
};

Config parse_config(const std::string& text);
std::string serialize_config(const Config& cfg);
Config load_config(const std::string& path);
void save_config(const Config& cfg, const std::string& path);

// Exact-render options (no culling); used by evaluation and oracles.
RenderOptions exact_render_options(const Config& cfg);
// Training-time options (stratified sampling, culling, early termination).
RenderOptions train_render_options(const Config& cfg);

LossWeights loss_weights(const Config& cfg);

// Builds an initialized model for the given scene bounds. Deterministic in
// (cfg, bounds): all initializers stream from cfg.seed.
template <class Real>
Model<Real> build_model(const Config& cfg, const SceneBounds& bounds);

}  // namespace strf
