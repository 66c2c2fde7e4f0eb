#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aoi_sim/metrics.hpp"
#include "aoi_sim/rng.hpp"

using namespace aoisim;

namespace {

Image constant_image(int value, int w = 4, int h = 4) { return Image(w, h, 8, value); }

Image random_image(Rng& rng, int w = 32, int h = 32) {
    Image img(w, h, 8);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            img.set(r, c, static_cast<int>(rng.uniform01() * 256.0));
    return img;
}

// Brute-force re-derivations, written against the formulas rather than the
// library code: long-double accumulation, direct means and covariance.
long double oracle_mse(const Image& a, const Image& b) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < a.pixels().size(); ++i) {
        const long double d =
            static_cast<long double>(a.pixels()[i]) - static_cast<long double>(b.pixels()[i]);
        acc += d * d;
    }
    return acc / static_cast<long double>(a.pixels().size());
}

long double oracle_psnr(const Image& a, const Image& b) {
    const long double m = oracle_mse(a, b);
    if (m == 0.0L) return 100.0L;
    const long double r = a.max_value();
    const long double v = 10.0L * std::log10(static_cast<double>(r * r / m));
    return v > 100.0L ? 100.0L : v;
}

long double oracle_ssim(const Image& a, const Image& b) {
    const std::size_t n = a.pixels().size();
    long double mu_a = 0.0L, mu_b = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        mu_a += a.pixels()[i];
        mu_b += b.pixels()[i];
    }
    mu_a /= n;
    mu_b /= n;
    long double va = 0.0L, vb = 0.0L, cov = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        va += (a.pixels()[i] - mu_a) * (a.pixels()[i] - mu_a);
        vb += (b.pixels()[i] - mu_b) * (b.pixels()[i] - mu_b);
        cov += (a.pixels()[i] - mu_a) * (b.pixels()[i] - mu_b);
    }
    va /= n;
    vb /= n;
    cov /= n;
    const long double l = a.max_value();
    const long double c1 = (0.01L * l) * (0.01L * l);
    const long double c2 = (0.03L * l) * (0.03L * l);
    return ((2.0L * mu_a * mu_b + c1) * (2.0L * cov + c2)) /
           ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2));
}

}  // namespace

TEST_CASE("mse on hand cases") {
    REQUIRE(metrics::mse(constant_image(7), constant_image(7)) == 0.0);
    REQUIRE(metrics::mse(constant_image(255, 1, 1), constant_image(0, 1, 1)) == 65025.0);
    Image a(2, 1), b(2, 1);
    a.set(0, 0, 0);
    a.set(0, 1, 255);
    b.set(0, 0, 255);
    b.set(0, 1, 0);
    REQUIRE(metrics::mse(a, b) == 65025.0);
    REQUIRE_THROWS_AS(metrics::mse(constant_image(0, 2, 2), constant_image(0, 3, 3)),
                      std::invalid_argument);
}

TEST_CASE("psnr hand cases: zero dB, cap, 20 dB") {
    // MSE = R^2 gives exactly 0 dB.
    REQUIRE(metrics::psnr(constant_image(255, 1, 1), constant_image(0, 1, 1)) == 0.0);
    // Identical images hit the cap.
    REQUIRE(metrics::psnr(constant_image(9), constant_image(9)) == 100.0);
    // MSE = R^2 / 100 gives 20 dB: |255 - x| = 25.5 is not integral, so use
    // a synthetic pair whose MSE we control through mixed pixels. Simpler:
    // verify the formula shape via the oracle on a computed case below, and
    // here check strict monotonicity in MSE.
    Image a = constant_image(0, 2, 2);
    Image closer = constant_image(10, 2, 2);
    Image farther = constant_image(20, 2, 2);
    REQUIRE(metrics::psnr(a, closer) > metrics::psnr(a, farther));
    // Symmetry.
    REQUIRE(metrics::psnr(a, farther) == metrics::psnr(farther, a));
}

TEST_CASE("ssim hand cases") {
    Rng rng(3);
    const Image a = random_image(rng);
    REQUIRE(std::abs(metrics::ssim(a, a) - 1.0) < 1e-12);
    // Two equal constants are perfectly similar; unequal constants are not.
    REQUIRE(metrics::ssim(constant_image(40), constant_image(40)) == 1.0);
    REQUIRE(metrics::ssim(constant_image(40), constant_image(200)) < 1.0);
    // Anti-correlated checkerboards with large contrast go negative.
    Image cb1(8, 8), cb2(8, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            const bool on = (r + c) % 2 == 0;
            cb1.set(r, c, on ? 255 : 0);
            cb2.set(r, c, on ? 0 : 255);
        }
    REQUIRE(metrics::ssim(cb1, cb2) < 0.0);
    // Symmetry.
    const Image b = random_image(rng);
    REQUIRE(metrics::ssim(a, b) == metrics::ssim(b, a));
}

TEST_CASE("metrics match the brute-force oracle on random pairs") {
    Rng rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
        const Image a = random_image(rng);
        const Image b = random_image(rng);
        const double m = metrics::mse(a, b);
        const double p = metrics::psnr(a, b);
        const double s = metrics::ssim(a, b);
        REQUIRE(std::abs(m - static_cast<double>(oracle_mse(a, b))) <=
                1e-9 * std::max(1.0, std::abs(m)));
        REQUIRE(std::abs(p - static_cast<double>(oracle_psnr(a, b))) <=
                1e-9 * std::max(1.0, std::abs(p)));
        REQUIRE(std::abs(s - static_cast<double>(oracle_ssim(a, b))) <=
                1e-9 * std::max(1.0, std::abs(s)));
    }
}

TEST_CASE("reward composes the weighted metrics") {
    const Image a = constant_image(50);
    // Identical images, defaults, no LPIPS: 0.02 * 100 + 0.5 * 1 = 2.5.
    REQUIRE(metrics::reward(a, a) == Catch::Approx(2.5).margin(1e-12));

    metrics::RewardWeights only_psnr;
    only_psnr.w_psnr = 1.0;
    only_psnr.w_ssim = 0.0;
    Rng rng(8);
    const Image x = random_image(rng), y = random_image(rng);
    REQUIRE(metrics::reward(x, y, only_psnr) == metrics::psnr(x, y));

    // Mock LPIPS plugin contributes with weight -1.
    metrics::RewardWeights w;
    w.lpips_provider = [](const Image&, const Image&) { return 0.342; };
    const auto breakdown = metrics::reward_breakdown(x, y, w);
    REQUIRE(breakdown.lpips_available);
    REQUIRE(breakdown.total ==
            Catch::Approx(0.02 * breakdown.psnr_db + 0.5 * breakdown.ssim_value - 0.342)
                .margin(1e-12));

    // Without the plugin the LPIPS term is absent.
    const auto no_plugin = metrics::reward_breakdown(x, y);
    REQUIRE_FALSE(no_plugin.lpips_available);
    REQUIRE(no_plugin.total ==
            Catch::Approx(0.02 * no_plugin.psnr_db + 0.5 * no_plugin.ssim_value).margin(1e-12));
}

TEST_CASE("image container bounds and clamping") {
    REQUIRE_THROWS_AS(Image(0, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(Image(4, 4, 17), std::invalid_argument);
    REQUIRE_THROWS_AS(Image(4, 4, 8, 300), std::invalid_argument);
    Image img(2, 2, 8);
    img.set(0, 0, 600);
    REQUIRE(img.at(0, 0) == 255);
    img.set(0, 0, -5);
    REQUIRE(img.at(0, 0) == 0);
    REQUIRE(img.max_value() == 255);
    REQUIRE(Image(2, 2, 10).max_value() == 1023);
}
