// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "strf/rng.hpp"

namespace strf {

template <class Real>
struct Dense {
    int in = 0, out = 0;
    std::vector<Real> w;  // row-major [out][in]
    std::vector<Real> b;
};

// Plain fully connected net: ReLU between layers, linear final layer. Output
// nonlinearities (sigmoid, softplus) belong to the caller, which keeps the
// taped activations pre-activation where it matters.
template <class Real>
struct Mlp {
    std::vector<Dense<Real>> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out; }

    // Activation tape length: input copy + every layer output.
    int tape_size() const {
        int n = input_dim();
        for (const auto& l : layers) n += l.out;
        return n;
    }

    // dims = {in, hidden..., out}; He initialization for the ReLU hiddens.
    void init(const std::vector<int>& dims, Rng& rng);
};

// Runs the net, recording activations (input, then each layer's post-ReLU
// output, final layer linear). Returns a pointer to the output inside tape.
template <class Real>
const Real* mlp_forward(const Mlp<Real>& mlp, const Real* x, Real* tape);

// Backpropagates dout through the taped activations; accumulates parameter
// gradients into grads (shape-identical) and, when dx != nullptr, the input
// gradient. May be called with dextra pointing at an additional gradient to
// inject at the last hidden layer (used for multi-head sharing).
template <class Real>
void mlp_backward(const Mlp<Real>& mlp, const Real* tape, const Real* dout, Mlp<Real>& grads,
                  Real* dx, const Real* dlast_hidden = nullptr);

// Pointer to the last hidden activation inside a forward tape (the shared
// trunk consumed by downstream heads).
template <class Real>
const Real* mlp_last_hidden(const Mlp<Real>& mlp, const Real* tape);

}  // namespace strf
