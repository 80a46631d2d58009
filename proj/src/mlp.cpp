// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace strf {

template <class Real>
void Mlp<Real>::init(const std::vector<int>& dims, Rng& rng) {
    if (dims.size() < 2) throw std::invalid_argument("Mlp::init: need at least in/out dims");
    if (dims.size() > 17) throw std::invalid_argument("Mlp::init: too many layers");
    layers.clear();
    layers.resize(dims.size() - 1);
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        auto& l = layers[i];
        l.in = dims[i];
        l.out = dims[i + 1];
        l.w.resize(size_t(l.in) * l.out);
        l.b.assign(l.out, Real(0));
        const double stddev = std::sqrt(2.0 / l.in);
        for (auto& v : l.w) v = Real(rng.normal(0.0, stddev));
    }
}

template <class Real>
const Real* mlp_forward(const Mlp<Real>& mlp, const Real* x, Real* tape) {
    const int in0 = mlp.input_dim();
    for (int i = 0; i < in0; ++i) tape[i] = x[i];
    const Real* cur = tape;
    Real* out = tape + in0;
    for (size_t li = 0; li < mlp.layers.size(); ++li) {
        const auto& l = mlp.layers[li];
        const bool last = li + 1 == mlp.layers.size();
        const Real* w = l.w.data();
        for (int o = 0; o < l.out; ++o) {
            Real acc = l.b[o];
            const Real* wrow = w + size_t(o) * l.in;
            for (int i = 0; i < l.in; ++i) acc += wrow[i] * cur[i];
            out[o] = (!last && acc < Real(0)) ? Real(0) : acc;
        }
        cur = out;
        out += l.out;
    }
    return cur;
}

template <class Real>
const Real* mlp_last_hidden(const Mlp<Real>& mlp, const Real* tape) {
    if (mlp.layers.size() < 2) return tape;  // degenerate: the input itself
    int off = mlp.input_dim();
    for (size_t li = 0; li + 2 < mlp.layers.size(); ++li) off += mlp.layers[li].out;
    return tape + off;
}

template <class Real>
void mlp_backward(const Mlp<Real>& mlp, const Real* tape, const Real* dout, Mlp<Real>& grads,
                  Real* dx, const Real* dlast_hidden) {
    const int n_layers = int(mlp.layers.size());
    // Offsets of each layer's input inside the tape.
    int off_in[16];
    int off = 0;
    for (int li = 0; li < n_layers; ++li) {
        off_in[li] = off;
        off += mlp.layers[li].in;
    }

    // Buffers for the running output-side gradient.
    std::vector<Real> grad_a(dout, dout + mlp.output_dim());
    std::vector<Real> grad_in;

    for (int li = n_layers - 1; li >= 0; --li) {
        const auto& l = mlp.layers[li];
        auto& gl = grads.layers[li];
        const Real* a_in = tape + off_in[li];
        const Real* a_out = tape + off_in[li] + l.in;  // this layer's recorded output
        const bool last = li == n_layers - 1;

        // For hidden layers the recorded output is post-ReLU; gate the grad.
        if (!last) {
            for (int o = 0; o < l.out; ++o)
                if (a_out[o] <= Real(0)) grad_a[o] = Real(0);
        }
        grad_in.assign(l.in, Real(0));
        const Real* w = l.w.data();
        Real* gw = gl.w.data();
        for (int o = 0; o < l.out; ++o) {
            const Real g = grad_a[o];
            if (g == Real(0)) continue;
            gl.b[o] += g;
            const Real* wrow = w + size_t(o) * l.in;
            Real* gwrow = gw + size_t(o) * l.in;
            for (int i = 0; i < l.in; ++i) {
                gwrow[i] += g * a_in[i];
                grad_in[i] += g * wrow[i];
            }
        }
        if (li == 0) {
            if (dx)
                for (int i = 0; i < l.in; ++i) dx[i] += grad_in[i];
            return;
        }
        grad_a = grad_in;
        if (dlast_hidden && li == n_layers - 1) {
            // grad_a now holds the gradient at the last hidden output; add the
            // externally injected share before the ReLU gate of layer li-1.
            const int nh = mlp.layers[li - 1].out;
            for (int i = 0; i < nh; ++i) grad_a[i] += dlast_hidden[i];
        }
    }
}

#define STRF_INSTANTIATE(Real)                                                               \
    template struct Mlp<Real>;                                                               \
    template const Real* mlp_forward<Real>(const Mlp<Real>&, const Real*, Real*);            \
    template const Real* mlp_last_hidden<Real>(const Mlp<Real>&, const Real*);               \
    template void mlp_backward<Real>(const Mlp<Real>&, const Real*, const Real*, Mlp<Real>&, \
                                     Real*, const Real*);

STRF_INSTANTIATE(float)
STRF_INSTANTIATE(double)
#undef STRF_INSTANTIATE

}  // namespace strf
