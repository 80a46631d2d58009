// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "strf/checkpoint.hpp"
#include "strf/config.hpp"
#include "strf/data.hpp"
#include "strf/difftape.hpp"
#include "strf/optim.hpp"

namespace strf {

struct TrainOutcome {
    bool ok = true;
    std::string error;  // divergence message when !ok
    int64_t steps_done = 0;
    double best_val_psnr = 0.0;
    std::vector<std::pair<int64_t, double>> val_history;  // (step, psnr)
    std::string final_ckpt;
    std::string best_ckpt;
    std::string csv_path;
};

// The training loop: per step, a without-replacement ray batch over the train
// pixels, forward/backward, one Adam update per parameter group, a CSV row;
// periodic validation PSNR with best-checkpointing. Deterministic in
// (config, dataset, thread count). On divergence the last written checkpoint
// is left in place and the outcome carries the error.
template <class Real>
TrainOutcome train_model(const Config& cfg, const Dataset& dataset, const std::string& out_dir);

struct EvalRow {
    int view = 0;
    double psnr = 0, ssim = 0, mae = 0;  // mae NaN without a reference surface
};

// Renders each view of the split and scores it; altitude MAE comes from a
// per-view DSM against the dataset's reference surface grid when present.
template <class Real>
std::vector<EvalRow> evaluate_split(const Model<Real>& model, const Dataset& dataset,
                                    bool test_split, const RenderOptions& opts,
                                    double dsm_opacity_threshold);

void write_metrics_csv(const std::vector<EvalRow>& rows, const std::string& path);

}  // namespace strf
