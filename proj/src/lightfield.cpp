// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/lightfield.hpp"

#include <cmath>
#include <stdexcept>

namespace strf {

namespace {

constexpr double kGoldenAngle = 2.399963229728653;  // pi * (3 - sqrt(5))

template <class Real>
inline Real sigmoid(Real x) {
    return Real(1) / (Real(1) + std::exp(-x));
}

template <class Real>
inline Real softplus(Real x) {
    return x > Real(30) ? x : std::log1p(std::exp(x));
}

constexpr double kBandwidthFloor = 1e-4;

}  // namespace

AsgGeometry AsgGeometry::fibonacci(int n) {
    AsgGeometry g;
    g.axis.resize(n);
    g.tan_l.resize(n);
    g.tan_m.resize(n);
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = kGoldenAngle * i;
        const Vec3 a{r * std::cos(phi), r * std::sin(phi), z};
        Vec3 ref{0, 0, 1};
        if (std::abs(dot(a, ref)) > 0.99) ref = {1, 0, 0};
        const Vec3 tl = (ref - dot(ref, a) * a).normalized();
        g.axis[i] = a;
        g.tan_l[i] = tl;
        g.tan_m[i] = cross(a, tl);
    }
    return g;
}

void AsgGeometry::validate() const {
    for (int i = 0; i < n_lobes(); ++i) {
        const Vec3& a = axis[i];
        const Vec3& l = tan_l[i];
        const Vec3& m = tan_m[i];
        if (std::abs(a.norm() - 1) > 1e-9 || std::abs(l.norm() - 1) > 1e-9 ||
            std::abs(m.norm() - 1) > 1e-9 || std::abs(dot(a, l)) > 1e-9 ||
            std::abs(dot(a, m)) > 1e-9 || std::abs(dot(l, m)) > 1e-9)
            throw std::runtime_error("AsgGeometry: lobe frame not orthonormal");
    }
}

template <class Real>
void asg_encode(const AsgGeometry& geom, const Real* features, const Real* lambda, const Real* mu,
                int feature_dim, const Real omega[3], Real* out, Real* lobe_tape) {
    for (int k = 0; k < feature_dim; ++k) out[k] = Real(0);
    const int n = geom.n_lobes();
    for (int j = 0; j < n; ++j) {
        const Vec3& a = geom.axis[j];
        const Vec3& tl = geom.tan_l[j];
        const Vec3& tm = geom.tan_m[j];
        const Real da = Real(a.x) * omega[0] + Real(a.y) * omega[1] + Real(a.z) * omega[2];
        const Real dl = Real(tl.x) * omega[0] + Real(tl.y) * omega[1] + Real(tl.z) * omega[2];
        const Real dm = Real(tm.x) * omega[0] + Real(tm.y) * omega[1] + Real(tm.z) * omega[2];
        Real g = Real(0);
        if (da > Real(0)) g = da * std::exp(-(lambda[j] * dl * dl + mu[j] * dm * dm));
        if (lobe_tape) {
            lobe_tape[4 * j + 0] = da;
            lobe_tape[4 * j + 1] = dl;
            lobe_tape[4 * j + 2] = dm;
            lobe_tape[4 * j + 3] = g;
        }
        if (g != Real(0)) {
            const Real* f = features + size_t(j) * feature_dim;
            for (int k = 0; k < feature_dim; ++k) out[k] += g * f[k];
        }
    }
}

template <class Real>
void asg_encode_backward(const AsgGeometry& geom, const Real* features, int feature_dim,
                         const Real* lobe_tape, const Real* dout, Real* dfeatures, Real* dlambda,
                         Real* dmu) {
    const int n = geom.n_lobes();
    for (int j = 0; j < n; ++j) {
        const Real dl = lobe_tape[4 * j + 1];
        const Real dm = lobe_tape[4 * j + 2];
        const Real g = lobe_tape[4 * j + 3];
        const Real* f = features + size_t(j) * feature_dim;
        Real* df = dfeatures + size_t(j) * feature_dim;
        Real dg = Real(0);
        for (int k = 0; k < feature_dim; ++k) {
            df[k] += g * dout[k];
            dg += f[k] * dout[k];
        }
        // dG/dlambda = -dl^2 * G, dG/dmu = -dm^2 * G (zero when gated off).
        dlambda[j] += -dl * dl * g * dg;
        dmu[j] += -dm * dm * g * dg;
    }
}

template <class Real>
std::vector<Real> asg_encode(const Vec3& omega, const AsgBank<Real>& bank) {
    std::vector<Real> out(bank.feature_dim);
    const Real o[3] = {Real(omega.x), Real(omega.y), Real(omega.z)};
    asg_encode(*bank.geom, bank.features.data(), bank.lambda.data(), bank.mu.data(),
               bank.feature_dim, o, out.data(), static_cast<Real*>(nullptr));
    return out;
}

template <class Real>
void sh_basis(const Real dir[3], int degree, Real* out) {
    const Real x = dir[0], y = dir[1], z = dir[2];
    out[0] = Real(0.28209479177387814);
    if (degree < 1) return;
    out[1] = Real(0.4886025119029199) * y;
    out[2] = Real(0.4886025119029199) * z;
    out[3] = Real(0.4886025119029199) * x;
    if (degree < 2) return;
    const Real xx = x * x, yy = y * y, zz = z * z;
    out[4] = Real(1.0925484305920792) * x * y;
    out[5] = Real(1.0925484305920792) * y * z;
    out[6] = Real(0.31539156525252005) * (Real(3) * zz - Real(1));
    out[7] = Real(1.0925484305920792) * x * z;
    out[8] = Real(0.5462742152960396) * (xx - yy);
    if (degree < 3) return;
    out[9] = Real(0.5900435899266435) * y * (Real(3) * xx - yy);
    out[10] = Real(2.890611442640554) * x * y * z;
    out[11] = Real(0.4570457994644658) * y * (Real(5) * zz - Real(1));
    out[12] = Real(0.3731763325901154) * z * (Real(5) * zz - Real(3));
    out[13] = Real(0.4570457994644658) * x * (Real(5) * zz - Real(1));
    out[14] = Real(1.445305721320277) * z * (xx - yy);
    out[15] = Real(0.5900435899266435) * x * (xx - Real(3) * yy);
}

template <class Real>
std::array<Real, 3> sh_encode(const Vec3& omega, int degree, const Real* coefficients) {
    if (degree > 3) throw std::invalid_argument("sh_encode: degree must be <= 3");
    const int nb = sh_basis_size(degree);
    Real basis[16];
    const Real dir[3] = {Real(omega.x), Real(omega.y), Real(omega.z)};
    sh_basis(dir, degree, basis);
    std::array<Real, 3> rgb;
    for (int ch = 0; ch < 3; ++ch) {
        Real acc = Real(0);
        for (int b = 0; b < nb; ++b) acc += coefficients[ch * nb + b] * basis[b];
        rgb[ch] = sigmoid(acc);
    }
    return rgb;
}

// ---------------------------------------------------------------------------
// Lightfield assembly

namespace {

// Scratch offsets inside a per-point lightfield tape.
template <class Real>
struct LfOffsets {
    int a = 0;       // head A tape
    int b = 0;       // head B tape
    int lam = 0;     // post-softplus lambda (asg)
    int mu = 0;      // post-softplus mu (asg)
    int lobes = 0;   // 4 per lobe (asg)
    int fs = 0;      // encoded feature (asg)
    int din = 0;     // head D input (asg)
    int d = 0;       // head D tape (asg)
    int basis = 0;   // SH basis values (sh)
    int zsh = 0;     // SH pre-sigmoid accumulators (sh)
    int total = 0;

    explicit LfOffsets(const Lightfield<Real>& lf) {
        int off = 0;
        a = off;
        off += lf.head_a.tape_size();
        if (!lf.lambertian) {
            b = off;
            off += lf.head_b.tape_size();
            if (lf.decoder == DecoderKind::Asg) {
                const int n = lf.geom.n_lobes();
                lam = off; off += n;
                mu = off; off += n;
                lobes = off; off += 4 * n;
                fs = off; off += lf.feature_dim;
                din = off; off += lf.feature_dim + 1;
                d = off; off += lf.head_d.tape_size();
            } else {
                basis = off; off += sh_basis_size(lf.sh_degree);
                zsh = off; off += 3;
            }
        }
        total = off;
    }
};

}  // namespace

template <class Real>
int Lightfield<Real>::tape_size() const {
    return LfOffsets<Real>(*this).total;
}

template <class Real>
Lightfield<Real> make_lightfield(int feature_in, int head_a_layers, int head_a_width,
                                 int head_bd_width, int n_lobes, int feature_dim,
                                 DecoderKind decoder, int sh_degree, bool lambertian, Rng& rng) {
    if (head_a_layers < 2) throw std::invalid_argument("make_lightfield: head A needs >= 2 layers");
    Lightfield<Real> lf;
    lf.feature_dim = feature_dim;
    lf.decoder = decoder;
    lf.sh_degree = sh_degree;
    lf.lambertian = lambertian;
    lf.geom = AsgGeometry::fibonacci(n_lobes);

    std::vector<int> dims_a(head_a_layers + 1, head_a_width);
    dims_a.front() = feature_in;
    dims_a.back() = 7;  // c_d(3) + lambda_s + n_raw(3)
    lf.head_a.init(dims_a, rng);

    if (!lambertian) {
        const int b_out = decoder == DecoderKind::Asg ? n_lobes * (feature_dim + 2)
                                                      : 3 * sh_basis_size(sh_degree);
        lf.head_b.init({head_a_width, head_bd_width, b_out}, rng);
        if (decoder == DecoderKind::Asg)
            lf.head_d.init({feature_dim + 1, head_bd_width, 3}, rng);
    }
    return lf;
}

template <class Real>
void lightfield_eval(const Lightfield<Real>& lf, const Real* feature, const Real dir[3],
                     Real* tape, SurfacePoint<Real>& out) {
    const LfOffsets<Real> at(lf);
    const Real* za = mlp_forward(lf.head_a, feature, tape + at.a);

    for (int c = 0; c < 3; ++c) out.c_d[c] = sigmoid(za[c]);
    out.lambda_s = lf.lambertian ? Real(0) : sigmoid(za[3]);

    const Real nraw[3] = {za[4], za[5], za[6]};
    const Real nn = Real(
        std::sqrt(double(nraw[0]) * nraw[0] + double(nraw[1]) * nraw[1] + double(nraw[2]) * nraw[2]));
    if (nn < Real(1e-8)) {
        out.n[0] = 0; out.n[1] = 0; out.n[2] = 1;
        out.inv_norm = Real(0);
        out.normal_fallback = true;
    } else {
        out.inv_norm = Real(1) / nn;
        for (int c = 0; c < 3; ++c) out.n[c] = nraw[c] * out.inv_norm;
        out.normal_fallback = false;
    }
    out.cos_nd = out.n[0] * dir[0] + out.n[1] * dir[1] + out.n[2] * dir[2];

    if (lf.lambertian) {
        for (int c = 0; c < 3; ++c) {
            out.c_s[c] = Real(0);
            out.c_ref[c] = out.c_d[c];
        }
        return;
    }

    const Real* hidden = mlp_last_hidden(lf.head_a, tape + at.a);
    const Real* zb = mlp_forward(lf.head_b, hidden, tape + at.b);

    if (lf.decoder == DecoderKind::Asg) {
        const int n = lf.geom.n_lobes();
        const int df = lf.feature_dim;
        Real* lam = tape + at.lam;
        Real* mu = tape + at.mu;
        for (int j = 0; j < n; ++j) {
            lam[j] = softplus(zb[j * (df + 2) + df]) + Real(kBandwidthFloor);
            mu[j] = softplus(zb[j * (df + 2) + df + 1]) + Real(kBandwidthFloor);
        }
        // Features per lobe are strided inside zb; ASG wants them contiguous.
        // Stride via a gather into the tape region that also serves backward.
        Real* fs = tape + at.fs;
        Real* din = tape + at.din;
        // asg_encode reads features with stride feature_dim; build a view.
        // zb rows are (df+2) long so we pass a packed copy through `din` is
        // too small; gather into a stack buffer instead.
        Real packed[2048];
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < df; ++k) packed[j * df + k] = zb[j * (df + 2) + k];
        asg_encode(lf.geom, packed, lam, mu, df, dir, fs, tape + at.lobes);
        for (int k = 0; k < df; ++k) din[k] = fs[k];
        din[df] = out.cos_nd;
        const Real* zd = mlp_forward(lf.head_d, din, tape + at.d);
        for (int c = 0; c < 3; ++c) out.c_s[c] = sigmoid(zd[c]);
    } else {
        const int nb = sh_basis_size(lf.sh_degree);
        Real* basis = tape + at.basis;
        sh_basis(dir, lf.sh_degree, basis);
        Real* zsh = tape + at.zsh;
        for (int ch = 0; ch < 3; ++ch) {
            Real acc = Real(0);
            for (int b = 0; b < nb; ++b) acc += zb[ch * nb + b] * basis[b];
            zsh[ch] = acc;
            out.c_s[ch] = sigmoid(acc);
        }
    }

    for (int c = 0; c < 3; ++c) out.c_ref[c] = out.c_d[c] + out.lambda_s * out.c_s[c];
}

template <class Real>
void lightfield_backward(const Lightfield<Real>& lf, const Real* tape,
                         const SurfacePoint<Real>& pt, const Real dir[3], const Real d_cref[3],
                         Real d_cosnd_extra, Lightfield<Real>& grads, Real* d_feature) {
    const LfOffsets<Real> at(lf);
    const int df = lf.feature_dim;
    const int n = lf.geom.n_lobes();

    // c_ref = c_d + lambda_s * c_s
    Real d_cd[3], d_cs[3];
    Real d_lambda_s = Real(0);
    for (int c = 0; c < 3; ++c) {
        d_cd[c] = d_cref[c];
        d_cs[c] = pt.lambda_s * d_cref[c];
        d_lambda_s += d_cref[c] * pt.c_s[c];
    }

    Real d_cosnd = d_cosnd_extra;
    std::vector<Real> d_hidden;  // gradient injected at head A's last hidden

    if (!lf.lambertian) {
        std::vector<Real> d_zb(lf.head_b.output_dim(), Real(0));
        if (lf.decoder == DecoderKind::Asg) {
            Real d_zd[3];
            for (int c = 0; c < 3; ++c)
                d_zd[c] = d_cs[c] * pt.c_s[c] * (Real(1) - pt.c_s[c]);
            std::vector<Real> d_din(df + 1, Real(0));
            mlp_backward(lf.head_d, tape + at.d, d_zd, grads.head_d, d_din.data());
            d_cosnd += d_din[df];

            // d_din[0..df) is dL/dF_s.
            const Real* zb_out =
                tape + at.b + lf.head_b.tape_size() - lf.head_b.output_dim();
            Real packed[2048];
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < df; ++k) packed[j * df + k] = zb_out[j * (df + 2) + k];
            std::vector<Real> d_packed(size_t(n) * df, Real(0));
            std::vector<Real> d_lam(n, Real(0)), d_mu(n, Real(0));
            asg_encode_backward(lf.geom, packed, df, tape + at.lobes, d_din.data(),
                                d_packed.data(), d_lam.data(), d_mu.data());
            for (int j = 0; j < n; ++j) {
                for (int k = 0; k < df; ++k) d_zb[j * (df + 2) + k] = d_packed[j * df + k];
                // softplus' = sigmoid of the raw value
                d_zb[j * (df + 2) + df] = d_lam[j] * sigmoid(zb_out[j * (df + 2) + df]);
                d_zb[j * (df + 2) + df + 1] = d_mu[j] * sigmoid(zb_out[j * (df + 2) + df + 1]);
            }
        } else {
            const int nb = sh_basis_size(lf.sh_degree);
            const Real* basis = tape + at.basis;
            for (int ch = 0; ch < 3; ++ch) {
                const Real d_z = d_cs[ch] * pt.c_s[ch] * (Real(1) - pt.c_s[ch]);
                for (int b = 0; b < nb; ++b) d_zb[ch * nb + b] = d_z * basis[b];
            }
        }
        d_hidden.assign(lf.head_b.input_dim(), Real(0));
        mlp_backward(lf.head_b, tape + at.b, d_zb.data(), grads.head_b, d_hidden.data());
    }

    // Normal path: cos_nd = n . dir, n = n_raw / ||n_raw||.
    Real d_n[3] = {d_cosnd * dir[0], d_cosnd * dir[1], d_cosnd * dir[2]};
    Real d_nraw[3] = {0, 0, 0};
    if (!pt.normal_fallback) {
        const Real ndot = pt.n[0] * d_n[0] + pt.n[1] * d_n[1] + pt.n[2] * d_n[2];
        for (int c = 0; c < 3; ++c) d_nraw[c] = pt.inv_norm * (d_n[c] - pt.n[c] * ndot);
    }

    Real d_za[7];
    for (int c = 0; c < 3; ++c) d_za[c] = d_cd[c] * pt.c_d[c] * (Real(1) - pt.c_d[c]);
    d_za[3] = lf.lambertian ? Real(0)
                            : d_lambda_s * pt.lambda_s * (Real(1) - pt.lambda_s);
    for (int c = 0; c < 3; ++c) d_za[4 + c] = d_nraw[c];

    mlp_backward(lf.head_a, tape + at.a, d_za, grads.head_a, d_feature,
                 d_hidden.empty() ? nullptr : d_hidden.data());
}

#define STRF_INSTANTIATE(Real)                                                                    \
    template struct AsgBank<Real>;                                                                \
    template struct Lightfield<Real>;                                                             \
    template struct SurfacePoint<Real>;                                                           \
    template void asg_encode<Real>(const AsgGeometry&, const Real*, const Real*, const Real*,     \
                                   int, const Real[3], Real*, Real*);                             \
    template void asg_encode_backward<Real>(const AsgGeometry&, const Real*, int, const Real*,    \
                                            const Real*, Real*, Real*, Real*);                    \
    template std::vector<Real> asg_encode<Real>(const Vec3&, const AsgBank<Real>&);               \
    template void sh_basis<Real>(const Real[3], int, Real*);                                      \
    template std::array<Real, 3> sh_encode<Real>(const Vec3&, int, const Real*);                  \
    template Lightfield<Real> make_lightfield<Real>(int, int, int, int, int, int, DecoderKind,    \
                                                    int, bool, Rng&);                             \
    template void lightfield_eval<Real>(const Lightfield<Real>&, const Real*, const Real[3],      \
                                        Real*, SurfacePoint<Real>&);                              \
    template void lightfield_backward<Real>(const Lightfield<Real>&, const Real*,                 \
                                            const SurfacePoint<Real>&, const Real[3],             \
                                            const Real[3], Real, Lightfield<Real>&, Real*);

STRF_INSTANTIATE(float)
STRF_INSTANTIATE(double)
#undef STRF_INSTANTIATE

}  // namespace strf
