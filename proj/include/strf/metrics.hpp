// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "strf/image.hpp"
#include "strf/renderer.hpp"

namespace strf {

// 10 log10(1 / MSE) over all channels, inputs in [0,1]. Identical images
// report the 99.0 sentinel.
double psnr(const Image& a, const Image& b);

// Standard single-scale SSIM: channel-mean grayscale, 11x11 Gaussian window
// (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2, mean over fully interior windows.
// Throws when the image is smaller than the window.
double ssim(const Image& a, const Image& b);

// Mean |dz| over jointly valid cells; throws when no cell is jointly valid.
double altitude_mae(const Dsm& pred, const Dsm& truth);

}  // namespace strf
