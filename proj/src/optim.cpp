// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace strf {

std::pair<double, double> lr_at(const LrSchedule& schedule, int step) {
    if (step < 0) throw std::invalid_argument("lr_at: negative step");
    const double s = std::min(double(step), double(schedule.total_steps));
    const double f = schedule.total_steps > 0
                         ? std::pow(schedule.floor_factor, s / double(schedule.total_steps))
                         : 1.0;
    return {schedule.base_tensor * f, schedule.base_mlp * f};
}

template <class Real>
void AdamState<Real>::init(const ParamRegistry<Real>& registry) {
    t = 0;
    blocks.resize(registry.blocks().size());
    for (size_t b = 0; b < blocks.size(); ++b) {
        blocks[b].m.assign(registry.blocks()[b].size, Real(0));
        blocks[b].v.assign(registry.blocks()[b].size, Real(0));
    }
}

template <class Real>
void adam_step(const ParamRegistry<Real>& registry, AdamState<Real>& state, double lr_tensor,
               double lr_mlp) {
    if (state.blocks.size() != registry.blocks().size())
        throw std::logic_error("adam_step: state not initialized for this registry");
    state.t += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, double(state.t));
    const double bc2 = 1.0 - std::pow(b2, double(state.t));

    for (size_t bi = 0; bi < registry.blocks().size(); ++bi) {
        const auto& block = registry.blocks()[bi];
        if (!block.grads) throw std::logic_error("adam_step: registry has no gradient binding");
        auto& mom = state.blocks[bi];
        const double lr = block.group == ParamGroup::Tensor ? lr_tensor : lr_mlp;
        Real* theta = block.values;
        const Real* g = block.grads;
        for (size_t i = 0; i < block.size; ++i) {
            const double gi = double(g[i]);
            if (!std::isfinite(gi))
                throw std::runtime_error("adam_step: non-finite gradient in block " + block.name);
            const double m = b1 * double(mom.m[i]) + (1.0 - b1) * gi;
            const double v = b2 * double(mom.v[i]) + (1.0 - b2) * gi * gi;
            mom.m[i] = Real(m);
            mom.v[i] = Real(v);
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            theta[i] = Real(double(theta[i]) - lr * mhat / (std::sqrt(vhat) + state.eps));
        }
    }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(const ParamRegistry<float>&, AdamState<float>&, double, double);
template void adam_step<double>(const ParamRegistry<double>&, AdamState<double>&, double, double);

}  // namespace strf
