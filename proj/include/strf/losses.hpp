// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "strf/geometry.hpp"
#include "strf/tensor_field.hpp"

namespace strf {

struct LossWeights {
    double rgb = 1.0;
    double tv = 1.0;
    double normal = 0.01;
    double lamb = 0.05;
    double ds = 0.1;
    double l1 = 0.0;  // ablation-only
    bool tv_all_planes = false;
};

struct LossReport {
    double rgb = 0, tv = 0, normal = 0, lamb = 0, ds = 0, l1 = 0;
    double total = 0;
};

// Mean over rays of the squared color error (sum over channels).
template <class Real>
double loss_rgb(const std::vector<std::array<Real, 3>>& pred,
                const std::vector<std::array<Real, 3>>& gt);

// Mean of squared adjacent-element differences over the rows and columns of
// the factor planes (XY by default, all three when all_planes), pooled over
// ranks/channels per level, then averaged over levels. Zero for CP fields.
template <class Real>
double loss_tv(const MultiscaleField<Real>& field, bool all_planes = false);

template <class Real>
void loss_tv_backward(const MultiscaleField<Real>& field, FieldGradients<Real>& grads, Real coef,
                      bool all_planes = false);

// (1/N) sum_i w_i max(0, d . n_i)^2 for one ray.
template <class Real>
double loss_normal(const std::vector<std::array<Real, 3>>& normals, const std::vector<Real>& w,
                   const Vec3& view_dir);

// sum_i (Tr_i - lamb_i)^2 + 1 - sum_i Tr_i alpha_i lamb_i for one ray.
template <class Real>
double loss_lambda_amb(const std::vector<Real>& tr, const std::vector<Real>& alpha,
                       const std::vector<Real>& lamb);

// Weighted squared height error, mean-normalized by the depth-point count.
double loss_depth(const std::vector<double>& rendered_heights,
                  const std::vector<double>& gt_distances, const std::vector<double>& weights);

// Mean absolute value over every factor entry of the field.
template <class Real>
double loss_l1(const MultiscaleField<Real>& field);

template <class Real>
void loss_l1_backward(const MultiscaleField<Real>& field, FieldGradients<Real>& grads, Real coef);

// Weighted sum; throws naming the first NaN component.
double total_loss(const LossReport& components, const LossWeights& weights);

}  // namespace strf
