// Copyright 2026 The strf Authors
// SPDX-License-Identifier: Apache-2.0

#include "strf/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace strf {

double psnr(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("psnr: shape mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        mse += d * d;
    }
    mse /= double(a.data.size());
    if (mse <= 0.0) return 99.0;
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("ssim: shape mismatch");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    if (a.width < kWin || a.height < kWin)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const int W = a.width, H = a.height;
    std::vector<double> ga(size_t(W) * H), gb(size_t(W) * H);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            const float* pa = a.px(r, c);
            const float* pb = b.px(r, c);
            ga[size_t(r) * W + c] = (pa[0] + pa[1] + pa[2]) / 3.0;
            gb[size_t(r) * W + c] = (pb[0] + pb[1] + pb[2]) / 3.0;
        }

    double kernel[kWin];
    double ksum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - (kWin - 1) / 2.0;
        kernel[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        ksum += kernel[i];
    }
    for (double& k : kernel) k /= ksum;

    double total = 0.0;
    size_t count = 0;
    const int half = kWin / 2;
    for (int r = half; r < H - half; ++r)
        for (int c = half; c < W - half; ++c) {
            double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
            for (int dr = -half; dr <= half; ++dr)
                for (int dc = -half; dc <= half; ++dc) {
                    const double w = kernel[dr + half] * kernel[dc + half];
                    const double va = ga[size_t(r + dr) * W + (c + dc)];
                    const double vb = gb[size_t(r + dr) * W + (c + dc)];
                    mu_a += w * va;
                    mu_b += w * vb;
                    aa += w * va * va;
                    bb += w * vb * vb;
                    ab += w * va * vb;
                }
            const double var_a = aa - mu_a * mu_a;
            const double var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            const double s = ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
                             ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
            total += s;
            ++count;
        }
    return total / double(count);
}

double altitude_mae(const Dsm& pred, const Dsm& truth) {
    if (pred.ncols != truth.ncols || pred.nrows != truth.nrows)
        throw std::invalid_argument("altitude_mae: grid mismatch");
    double acc = 0.0;
    size_t n = 0;
    for (int r = 0; r < pred.nrows; ++r)
        for (int c = 0; c < pred.ncols; ++c) {
            if (!pred.valid(r, c) || !truth.valid(r, c)) continue;
            acc += std::abs(pred.at(r, c) - truth.at(r, c));
            ++n;
        }
    if (n == 0) throw std::runtime_error("altitude_mae: no jointly valid cells");
    return acc / double(n);
}

}  // namespace strf
