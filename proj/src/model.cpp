// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/model.hpp"

#include <algorithm>
#include <cmath>

namespace strf {

namespace {

constexpr double kTauCap = 30.0;     // optical-depth clamp, keeps exp(-tau) normal in f32
constexpr double kHeightEps = 1e-12;

template <class Real>
void zero_mlp(Mlp<Real>& m) {
    for (auto& l : m.layers) {
        std::fill(l.w.begin(), l.w.end(), Real(0));
        std::fill(l.b.begin(), l.b.end(), Real(0));
    }
}

}  // namespace

template <class Real>
Model<Real> Model<Real>::make_gradients() const {
    Model<Real> g = *this;
    g.zero_params();
    return g;
}

template <class Real>
void Model<Real>::zero_params() {
    sigma_field.zero();
    ref_field.zero();
    c_amb_field.zero();
    lambda_amb_field.zero();
    zero_mlp(lightfield.head_a);
    zero_mlp(lightfield.head_b);
    zero_mlp(lightfield.head_d);
}

template <class Real>
size_t Model<Real>::param_count() const {
    size_t n = sigma_field.param_count() + ref_field.param_count() + c_amb_field.param_count() +
               lambda_amb_field.param_count();
    for (const auto* m : {&lightfield.head_a, &lightfield.head_b, &lightfield.head_d})
        for (const auto& l : m->layers) n += l.w.size() + l.b.size();
    return n;
}

template <class Real>
void RayTape<Real>::reserve(const Model<Real>& model, int n_samples, int max_shaded) {
    const int n = n_samples;
    const int k = max_shaded > 0 ? std::min(max_shaded, n) : n;
    c_sigma = model.sigma_field.channels();
    pos.resize(n);
    t.resize(n);
    delta.resize(n);
    sig_pre.resize(size_t(n) * c_sigma);
    sigma.resize(n);
    trans_e.resize(n);
    alpha.resize(n);
    tr.resize(n);
    w.resize(n);
    lamb_pre.resize(size_t(n) * 2);
    lamb.resize(n);
    camb_pre.resize(size_t(k) * 3);
    camb.resize(size_t(k) * 3);
    shaded.reserve(k);
    feat.resize(size_t(k) * model.ref_field.output_dim());
    lf_tape.resize(size_t(k) * model.lightfield.tape_size());
    points.resize(k);
    irradiance.resize(size_t(k) * 3);
    color.resize(size_t(k) * 3);
}

template <class Real>
bool model_ray_forward(const Model<Real>& model, const RaySampleSet& samples, const Vec3& dir,
                       const RenderOptions& opts, RayTape<Real>& tape) {
    if (samples.miss || samples.t.empty()) {
        tape.miss = true;
        tape.n_total = 0;
        tape.n_marched = 0;
        tape.shaded.clear();
        return false;
    }
    tape.miss = false;
    const int n = int(samples.t.size());
    tape.n_total = n;
    tape.dir[0] = Real(dir.x);
    tape.dir[1] = Real(dir.y);
    tape.dir[2] = Real(dir.z);

    const int cs = tape.c_sigma;
    Real act[64];

    // Density march with transmittance-based early termination.
    Real running_tr = Real(1);
    int m = n;
    for (int i = 0; i < n; ++i) {
        tape.pos[i] = samples.positions[i];
        tape.t[i] = Real(samples.t[i]);
        tape.delta[i] = Real(samples.delta[i]);

        sample_field(model.sigma_field, tape.pos[i], act, &tape.sig_pre[size_t(i) * cs]);
        Real s = Real(0);
        for (int c = 0; c < cs; ++c) s += act[c];
        s /= Real(cs);
        tape.sigma[i] = s;

        double tau = double(s) * double(tape.delta[i]);
        if (tau > kTauCap) tau = kTauCap;
        const Real e = std::exp(Real(-tau));
        tape.trans_e[i] = e;
        tape.alpha[i] = Real(1) - e;
        tape.tr[i] = running_tr;
        tape.w[i] = running_tr * tape.alpha[i];
        running_tr *= e;

        // Ambient factor at every marched sample (the ambient regularizer
        // needs it); ambient color only where appearance is evaluated.
        Real a2[2];
        sample_field(model.lambda_amb_field, tape.pos[i], a2, &tape.lamb_pre[size_t(i) * 2]);
        tape.lamb[i] = (a2[0] + a2[1]) * Real(0.5);

        if (opts.tr_cutoff > 0.0 && double(running_tr) < opts.tr_cutoff) {
            m = i + 1;
            break;
        }
    }
    tape.n_marched = m;

    // Appearance sample selection: every marched sample when the cutoff is
    // off, otherwise the top-K weights above the cutoff (ties by index).
    tape.shaded.clear();
    if (opts.weight_cutoff <= 0.0 && opts.max_shaded <= 0) {
        for (int i = 0; i < m; ++i) tape.shaded.push_back(i);
    } else {
        for (int i = 0; i < m; ++i)
            if (double(tape.w[i]) >= opts.weight_cutoff) tape.shaded.push_back(i);
        if (opts.max_shaded > 0 && int(tape.shaded.size()) > opts.max_shaded) {
            std::partial_sort(tape.shaded.begin(), tape.shaded.begin() + opts.max_shaded,
                              tape.shaded.end(), [&](int a, int b) {
                                  if (tape.w[a] != tape.w[b]) return tape.w[a] > tape.w[b];
                                  return a < b;
                              });
            tape.shaded.resize(opts.max_shaded);
            std::sort(tape.shaded.begin(), tape.shaded.end());
        }
    }

    const int feat_dim = model.ref_field.output_dim();
    const int lf_tape_size = model.lightfield.tape_size();

    Real rgb[3] = {0, 0, 0};
    for (size_t k = 0; k < tape.shaded.size(); ++k) {
        const int i = tape.shaded[k];
        Real* feat = tape.feat.data() + k * feat_dim;
        sample_field(model.ref_field, tape.pos[i], feat);
        auto& pt = tape.points[k];
        lightfield_eval(model.lightfield, feat, tape.dir, tape.lf_tape.data() + k * lf_tape_size,
                        pt);
        Real* camb = tape.camb.data() + k * 3;
        sample_field(model.c_amb_field, tape.pos[i], camb, &tape.camb_pre[k * 3]);
        const Real lam = tape.lamb[i];
        Real* l = tape.irradiance.data() + k * 3;
        Real* col = tape.color.data() + k * 3;
        for (int c = 0; c < 3; ++c) {
            l[c] = lam + (Real(1) - lam) * camb[c];
            col[c] = pt.c_ref[c] * l[c];
            rgb[c] += tape.w[i] * col[c];
        }
    }

    Real wsum = Real(0), wt = Real(0);
    for (int i = 0; i < m; ++i) {
        wsum += tape.w[i];
        wt += tape.w[i] * tape.t[i];
    }
    tape.wsum = wsum;
    tape.height = wt / std::max(wsum, Real(kHeightEps));
    for (int c = 0; c < 3; ++c) tape.rgb[c] = rgb[c];
    return true;
}

template <class Real>
Real ray_normal_term(const RayTape<Real>& tape) {
    Real acc = Real(0);
    for (size_t k = 0; k < tape.shaded.size(); ++k) {
        const Real q = std::max(Real(0), tape.points[k].cos_nd);
        acc += tape.w[tape.shaded[k]] * q * q;
    }
    return acc;
}

template <class Real>
Real ray_lambda_term(const RayTape<Real>& tape) {
    Real acc = Real(1);
    for (int i = 0; i < tape.n_marched; ++i) {
        const Real d = tape.tr[i] - tape.lamb[i];
        acc += d * d - tape.w[i] * tape.lamb[i];
    }
    return acc;
}

template <class Real>
void model_ray_backward(const Model<Real>& model, const RayTape<Real>& tape, const Real d_rgb[3],
                        Real d_height, Real g_normal, Real g_lamb, Model<Real>& grads) {
    if (tape.miss || tape.n_marched == 0) return;
    const int m = tape.n_marched;
    const int cs = tape.c_sigma;
    const int lf_tape_size = model.lightfield.tape_size();

    std::vector<Real> dw(m, Real(0));
    std::vector<Real> dtr_direct(m, Real(0));
    std::vector<Real> dlamb(m, Real(0));

    // Height = (sum w t) / max(sum w, eps).
    if (d_height != Real(0)) {
        const Real wclamped = std::max(tape.wsum, Real(kHeightEps));
        const Real dA = d_height / wclamped;
        const Real dW = tape.wsum > Real(kHeightEps) ? -d_height * tape.height / wclamped : Real(0);
        for (int i = 0; i < m; ++i) dw[i] += tape.t[i] * dA + dW;
    }

    // Ambient regularizer: sum (Tr - lamb)^2 + 1 - sum w lamb.
    if (g_lamb != Real(0)) {
        for (int i = 0; i < m; ++i) {
            const Real d = tape.tr[i] - tape.lamb[i];
            dtr_direct[i] += g_lamb * Real(2) * d;
            dlamb[i] += -g_lamb * Real(2) * d - g_lamb * tape.w[i];
            dw[i] += -g_lamb * tape.lamb[i];
        }
    }

    // Color and orientation terms over the shaded subset.
    const bool has_color = d_rgb[0] != Real(0) || d_rgb[1] != Real(0) || d_rgb[2] != Real(0);
    for (size_t k = 0; k < tape.shaded.size(); ++k) {
        const int i = tape.shaded[k];
        const auto& pt = tape.points[k];
        const Real* col = tape.color.data() + k * 3;
        const Real* l = tape.irradiance.data() + k * 3;

        Real d_cref[3] = {0, 0, 0};
        Real d_cos_extra = Real(0);
        Real dcamb[3] = {0, 0, 0};

        if (has_color) {
            const Real wi = tape.w[i];
            const Real* camb = tape.camb.data() + k * 3;
            dw[i] += col[0] * d_rgb[0] + col[1] * d_rgb[1] + col[2] * d_rgb[2];
            for (int c = 0; c < 3; ++c) {
                const Real d_col = wi * d_rgb[c];
                d_cref[c] = d_col * l[c];
                const Real d_l = d_col * pt.c_ref[c];
                dlamb[i] += d_l * (Real(1) - camb[c]);
                dcamb[c] = d_l * (Real(1) - tape.lamb[i]);
            }
            sample_field_backward(model.c_amb_field, grads.c_amb_field, tape.pos[i], dcamb,
                                  &tape.camb_pre[k * 3]);
        }

        if (g_normal != Real(0)) {
            const Real q = std::max(Real(0), pt.cos_nd);
            dw[i] += g_normal * q * q;
            d_cos_extra = g_normal * tape.w[i] * Real(2) * q;
        }

        if (has_color || d_cos_extra != Real(0)) {
            Real d_feat[512] = {};
            lightfield_backward(model.lightfield, tape.lf_tape.data() + k * lf_tape_size, pt,
                                tape.dir, d_cref, d_cos_extra, grads.lightfield, d_feat);
            sample_field_backward(model.ref_field, grads.ref_field, tape.pos[i], d_feat,
                                  static_cast<const Real*>(nullptr));
        }
    }

    // Ambient factor field gradients.
    for (int i = 0; i < m; ++i) {
        if (dlamb[i] == Real(0)) continue;
        const Real half = dlamb[i] * Real(0.5);
        const Real dout2[2] = {half, half};
        sample_field_backward(model.lambda_amb_field, grads.lambda_amb_field, tape.pos[i], dout2,
                              &tape.lamb_pre[size_t(i) * 2]);
    }

    // Transmittance chain: tau_i = min(sigma_i * delta_i, cap), e_i = exp(-tau),
    // alpha_i = 1 - e_i, Tr_k = prod_{j<k} e_j. Suffix pass gives d(tau_i).
    Real suffix = Real(0);
    for (int i = m - 1; i >= 0; --i) {
        const Real dtau = dw[i] * tape.tr[i] * tape.trans_e[i] - suffix;
        suffix += (dw[i] * tape.alpha[i] + dtr_direct[i]) * tape.tr[i];

        const bool capped = double(tape.sigma[i]) * double(tape.delta[i]) > kTauCap;
        const Real dsigma = capped ? Real(0) : dtau * tape.delta[i];
        if (dsigma != Real(0)) {
            Real dout[64];
            const Real dchan = dsigma / Real(cs);
            for (int c = 0; c < cs; ++c) dout[c] = dchan;
            sample_field_backward(model.sigma_field, grads.sigma_field, tape.pos[i], dout,
                                  &tape.sig_pre[size_t(i) * cs]);
        }
    }
}

#define STRF_INSTANTIATE(Real)                                                                 \
    template struct Model<Real>;                                                               \
    template struct RayTape<Real>;                                                            \
    template bool model_ray_forward<Real>(const Model<Real>&, const RaySampleSet&, const Vec3&, \
                                          const RenderOptions&, RayTape<Real>&);               \
    template void model_ray_backward<Real>(const Model<Real>&, const RayTape<Real>&,           \
                                           const Real[3], Real, Real, Real, Model<Real>&);     \
    template Real ray_normal_term<Real>(const RayTape<Real>&);                                 \
    template Real ray_lambda_term<Real>(const RayTape<Real>&);

STRF_INSTANTIATE(float)
STRF_INSTANTIATE(double)
#undef STRF_INSTANTIATE

}  // namespace strf
