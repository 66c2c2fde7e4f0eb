#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

#include "aoi_sim/image.hpp"

namespace aoisim::metrics {

struct SsimParams {
    double k1 = 0.01;
    double k2 = 0.03;
    // Dynamic range L_d; if unset, taken from the image depth (R_I).
    std::optional<double> dynamic_range;
};

/// External perceptual-metric plugin: maps two images to a value in [0, inf).
using LpipsProvider = std::function<double(const Image&, const Image&)>;

struct RewardWeights {
    double w_psnr = 0.02;
    double w_ssim = 0.5;
    double w_lpips = -1.0;
    LpipsProvider lpips_provider;  // absent => LPIPS term contributes 0
};

inline constexpr double kPsnrCapDb = 100.0;

inline void require_same_shape(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("metrics: image dimension/depth mismatch");
}

inline double mse(const Image& a, const Image& b) {
    require_same_shape(a, b);
    double acc = 0.0;
    const auto& pa = a.pixels();
    const auto& pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(pa.size());
}

inline double psnr(const Image& a, const Image& b, double cap_db = kPsnrCapDb) {
    const double m = mse(a, b);
    if (m == 0.0) return cap_db;
    const double r = static_cast<double>(a.max_value());
    const double value = 10.0 * std::log10(r * r / m);
    return value > cap_db ? cap_db : value;
}

// Single-window SSIM over whole-image statistics (population variance).
inline double ssim(const Image& a, const Image& b, const SsimParams& p = {}) {
    require_same_shape(a, b);
    const double n = static_cast<double>(a.size());
    const auto& pa = a.pixels();
    const auto& pb = b.pixels();
    double sum_a = 0.0, sum_b = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        sum_a += pa[i];
        sum_b += pb[i];
    }
    const double mu_a = sum_a / n;
    const double mu_b = sum_b / n;
    double var_a = 0.0, var_b = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double da = pa[i] - mu_a;
        const double db = pb[i] - mu_b;
        var_a += da * da;
        var_b += db * db;
        cov += da * db;
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    const double ld = p.dynamic_range.value_or(static_cast<double>(a.max_value()));
    const double c1 = (p.k1 * ld) * (p.k1 * ld);
    const double c2 = (p.k2 * ld) * (p.k2 * ld);
    return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
           ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

struct RewardBreakdown {
    double psnr_db = 0.0;
    double ssim_value = 0.0;
    double lpips_value = 0.0;
    bool lpips_available = false;
    double total = 0.0;
};

inline RewardBreakdown reward_breakdown(const Image& ground_truth, const Image& recon,
                                        const RewardWeights& w = {}) {
    RewardBreakdown out;
    out.psnr_db = psnr(ground_truth, recon);
    out.ssim_value = ssim(ground_truth, recon);
    if (w.lpips_provider) {
        out.lpips_value = w.lpips_provider(ground_truth, recon);
        out.lpips_available = true;
    }
    out.total = w.w_psnr * out.psnr_db + w.w_ssim * out.ssim_value +
                (out.lpips_available ? w.w_lpips * out.lpips_value : 0.0);
    return out;
}

inline double reward(const Image& ground_truth, const Image& recon,
                     const RewardWeights& w = {}) {
    return reward_breakdown(ground_truth, recon, w).total;
}

}  // namespace aoisim::metrics
