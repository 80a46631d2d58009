// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "strf/params.hpp"

namespace strf {

// Log-linear decay from the base rates down to floor_factor * base at step S.
struct LrSchedule {
    double base_tensor = 2e-4;
    double base_mlp = 1e-4;
    int total_steps = 1;
    double floor_factor = 0.1;
};

// lr(s) = base * floor^(s/S), clamped at the floor beyond S.
std::pair<double, double> lr_at(const LrSchedule& schedule, int step);

template <class Real>
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t t = 0;

    struct Moments {
        std::vector<Real> m, v;
    };
    std::vector<Moments> blocks;  // parallel to the registry's block list

    void init(const ParamRegistry<Real>& registry);
};

// One bias-corrected Adam update over every registry block, reading gradients
// from the registry's bound gradient mirrors. Throws on non-finite gradients.
template <class Real>
void adam_step(const ParamRegistry<Real>& registry, AdamState<Real>& state, double lr_tensor,
               double lr_mlp);

}  // namespace strf
