// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/losses.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace strf {

namespace {

std::atomic<bool> g_tv_cp_warned{false};

// Squared-difference accumulation over one plane grid [n1][n2][cr].
template <class Real>
void plane_tv(const std::vector<Real>& grid, int n1, int n2, int cr, double* sum_sq,
              size_t* count) {
    for (int a = 0; a + 1 < n1; ++a) {
        const Real* row = grid.data() + size_t(a) * n2 * cr;
        const Real* nxt = grid.data() + size_t(a + 1) * n2 * cr;
        for (size_t q = 0; q < size_t(n2) * cr; ++q) {
            const double d = double(nxt[q]) - double(row[q]);
            *sum_sq += d * d;
        }
    }
    for (int a = 0; a < n1; ++a) {
        const Real* row = grid.data() + size_t(a) * n2 * cr;
        for (int b = 0; b + 1 < n2; ++b)
            for (int q = 0; q < cr; ++q) {
                const double d =
                    double(row[size_t(b + 1) * cr + q]) - double(row[size_t(b) * cr + q]);
                *sum_sq += d * d;
            }
    }
    *count += (size_t(n1 - 1) * n2 + size_t(n1) * (n2 - 1)) * cr;
}

template <class Real>
void plane_tv_backward(const std::vector<Real>& grid, std::vector<Real>& ggrid, int n1, int n2,
                       int cr, Real scale) {
    for (int a = 0; a + 1 < n1; ++a) {
        const Real* row = grid.data() + size_t(a) * n2 * cr;
        const Real* nxt = grid.data() + size_t(a + 1) * n2 * cr;
        Real* grow = ggrid.data() + size_t(a) * n2 * cr;
        Real* gnxt = ggrid.data() + size_t(a + 1) * n2 * cr;
        for (size_t q = 0; q < size_t(n2) * cr; ++q) {
            const Real d = Real(2) * (nxt[q] - row[q]) * scale;
            gnxt[q] += d;
            grow[q] -= d;
        }
    }
    for (int a = 0; a < n1; ++a) {
        const Real* row = grid.data() + size_t(a) * n2 * cr;
        Real* grow = ggrid.data() + size_t(a) * n2 * cr;
        for (int b = 0; b + 1 < n2; ++b)
            for (int q = 0; q < cr; ++q) {
                const Real d =
                    Real(2) * (row[size_t(b + 1) * cr + q] - row[size_t(b) * cr + q]) * scale;
                grow[size_t(b + 1) * cr + q] += d;
                grow[size_t(b) * cr + q] -= d;
            }
    }
}

template <class Real>
size_t plane_diff_count(int n1, int n2, int cr) {
    return (size_t(n1 - 1) * n2 + size_t(n1) * (n2 - 1)) * cr;
}

}  // namespace

template <class Real>
double loss_rgb(const std::vector<std::array<Real, 3>>& pred,
                const std::vector<std::array<Real, 3>>& gt) {
    if (pred.size() != gt.size()) throw std::invalid_argument("loss_rgb: shape mismatch");
    if (pred.empty()) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i)
        for (int c = 0; c < 3; ++c) {
            const double d = double(pred[i][c]) - double(gt[i][c]);
            acc += d * d;
        }
    return acc / double(pred.size());
}

template <class Real>
double loss_tv(const MultiscaleField<Real>& field, bool all_planes) {
    if (field.decomp == Decomp::CP) {
        if (!g_tv_cp_warned.exchange(true))
            std::fprintf(stderr, "warning: TV loss requested on a CP field; no planes, loss is 0\n");
        return 0.0;
    }
    double acc = 0.0;
    for (const auto& lev : field.levels) {
        double sum_sq = 0.0;
        size_t count = 0;
        plane_tv(lev.plane_xy, lev.nx, lev.ny, lev.cr(), &sum_sq, &count);
        if (all_planes) {
            plane_tv(lev.plane_yz, lev.ny, lev.nz, lev.cr(), &sum_sq, &count);
            plane_tv(lev.plane_xz, lev.nx, lev.nz, lev.cr(), &sum_sq, &count);
        }
        acc += count > 0 ? sum_sq / double(count) : 0.0;
    }
    return acc / double(field.levels.size());
}

template <class Real>
void loss_tv_backward(const MultiscaleField<Real>& field, FieldGradients<Real>& grads, Real coef,
                      bool all_planes) {
    if (field.decomp == Decomp::CP || coef == Real(0)) return;
    const Real per_level = coef / Real(field.levels.size());
    for (size_t l = 0; l < field.levels.size(); ++l) {
        const auto& lev = field.levels[l];
        auto& glev = grads.levels[l];
        size_t count = plane_diff_count<Real>(lev.nx, lev.ny, lev.cr());
        if (all_planes)
            count += plane_diff_count<Real>(lev.ny, lev.nz, lev.cr()) +
                     plane_diff_count<Real>(lev.nx, lev.nz, lev.cr());
        if (count == 0) continue;
        const Real scale = per_level / Real(double(count));
        plane_tv_backward(lev.plane_xy, glev.plane_xy, lev.nx, lev.ny, lev.cr(), scale);
        if (all_planes) {
            plane_tv_backward(lev.plane_yz, glev.plane_yz, lev.ny, lev.nz, lev.cr(), scale);
            plane_tv_backward(lev.plane_xz, glev.plane_xz, lev.nx, lev.nz, lev.cr(), scale);
        }
    }
}

template <class Real>
double loss_normal(const std::vector<std::array<Real, 3>>& normals, const std::vector<Real>& w,
                   const Vec3& view_dir) {
    if (normals.size() != w.size()) throw std::invalid_argument("loss_normal: shape mismatch");
    if (normals.empty()) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < normals.size(); ++i) {
        const double c = view_dir.x * double(normals[i][0]) + view_dir.y * double(normals[i][1]) +
                         view_dir.z * double(normals[i][2]);
        if (c > 0.0) acc += double(w[i]) * c * c;
    }
    return acc / double(normals.size());
}

template <class Real>
double loss_lambda_amb(const std::vector<Real>& tr, const std::vector<Real>& alpha,
                       const std::vector<Real>& lamb) {
    if (tr.size() != alpha.size() || tr.size() != lamb.size())
        throw std::invalid_argument("loss_lambda_amb: shape mismatch");
    double acc = 1.0;
    for (size_t i = 0; i < tr.size(); ++i) {
        const double d = double(tr[i]) - double(lamb[i]);
        acc += d * d - double(tr[i]) * double(alpha[i]) * double(lamb[i]);
    }
    return acc;
}

double loss_depth(const std::vector<double>& rendered_heights,
                  const std::vector<double>& gt_distances, const std::vector<double>& weights) {
    if (rendered_heights.size() != gt_distances.size() ||
        rendered_heights.size() != weights.size())
        throw std::invalid_argument("loss_depth: shape mismatch");
    if (rendered_heights.empty()) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < rendered_heights.size(); ++i) {
        const double d = rendered_heights[i] - gt_distances[i];
        acc += weights[i] * d * d;
    }
    return acc / double(rendered_heights.size());
}

template <class Real>
double loss_l1(const MultiscaleField<Real>& field) {
    double acc = 0.0;
    size_t count = 0;
    for (const auto& lev : field.levels)
        for (const auto* g : {&lev.line_x, &lev.line_y, &lev.line_z, &lev.plane_yz, &lev.plane_xz,
                              &lev.plane_xy}) {
            for (const Real v : *g) acc += std::abs(double(v));
            count += g->size();
        }
    return count > 0 ? acc / double(count) : 0.0;
}

template <class Real>
void loss_l1_backward(const MultiscaleField<Real>& field, FieldGradients<Real>& grads, Real coef) {
    if (coef == Real(0)) return;
    size_t count = 0;
    for (const auto& lev : field.levels) count += lev.param_count();
    if (count == 0) return;
    const Real scale = coef / Real(double(count));
    for (size_t l = 0; l < field.levels.size(); ++l) {
        const auto& lev = field.levels[l];
        auto& glev = grads.levels[l];
        const std::vector<Real>* src[6] = {&lev.line_x, &lev.line_y, &lev.line_z, &lev.plane_yz,
                                           &lev.plane_xz, &lev.plane_xy};
        std::vector<Real>* dst[6] = {&glev.line_x, &glev.line_y, &glev.line_z, &glev.plane_yz,
                                     &glev.plane_xz, &glev.plane_xy};
        for (int g = 0; g < 6; ++g)
            for (size_t q = 0; q < src[g]->size(); ++q) {
                const Real v = (*src[g])[q];
                (*dst[g])[q] += v > Real(0) ? scale : (v < Real(0) ? -scale : Real(0));
            }
    }
}

double total_loss(const LossReport& components, const LossWeights& weights) {
    const double vals[6] = {components.rgb,  components.tv, components.normal,
                            components.lamb, components.ds, components.l1};
    const char* names[6] = {"rgb", "tv", "normal", "lamb", "ds", "l1"};
    for (int i = 0; i < 6; ++i)
        if (!std::isfinite(vals[i]))
            throw std::runtime_error(std::string("total_loss: non-finite component ") + names[i]);
    return weights.rgb * components.rgb + weights.tv * components.tv +
           weights.normal * components.normal + weights.lamb * components.lamb +
           weights.ds * components.ds + weights.l1 * components.l1;
}

#define STRF_INSTANTIATE(Real)                                                                   \
    template double loss_rgb<Real>(const std::vector<std::array<Real, 3>>&,                      \
                                   const std::vector<std::array<Real, 3>>&);                     \
    template double loss_tv<Real>(const MultiscaleField<Real>&, bool);                           \
    template void loss_tv_backward<Real>(const MultiscaleField<Real>&, FieldGradients<Real>&,    \
                                         Real, bool);                                            \
    template double loss_normal<Real>(const std::vector<std::array<Real, 3>>&,                   \
                                      const std::vector<Real>&, const Vec3&);                    \
    template double loss_lambda_amb<Real>(const std::vector<Real>&, const std::vector<Real>&,    \
                                          const std::vector<Real>&);                             \
    template double loss_l1<Real>(const MultiscaleField<Real>&);                                 \
    template void loss_l1_backward<Real>(const MultiscaleField<Real>&, FieldGradients<Real>&,    \
                                         Real);

STRF_INSTANTIATE(float)
STRF_INSTANTIATE(double)
#undef STRF_INSTANTIATE

}  // namespace strf
