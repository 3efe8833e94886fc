#include "epgd/errors.hpp"
#include "epgd/metrics.hpp"

#include "support/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace epgd;

namespace {

// Straightforward reference MSE with a different summation order
// (long double, reversed) than the implementation.
double reference_psnr(const Image& a, const Image& b) {
    long double se = 0.0L;
    for (std::size_t i = a.pixels().size(); i-- > 0;) {
        const long double d = a.pixels()[i] - b.pixels()[i];
        se += d * d;
    }
    const long double mse = se / a.pixels().size();
    return static_cast<double>(10.0L * std::log10(255.0L * 255.0L / mse));
}

// Independently coded single-scale SSIM: same definition, different
// algebra (moments via weighted sums of x and x^2 instead of two passes).
double reference_ssim(const Image& a, const Image& b) {
    const int win = 11;
    const double sigma = 1.5;
    double w[11][11], wsum = 0.0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            w[i][j] = std::exp(-((i - 5.0) * (i - 5.0) + (j - 5.0) * (j - 5.0)) /
                               (2.0 * sigma * sigma));
            wsum += w[i][j];
        }
    const double c1 = 6.5025, c2 = 58.5225; // (0.01*255)^2, (0.03*255)^2
    double total = 0.0;
    int count = 0;
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y + win <= a.height(); ++y)
            for (int x = 0; x + win <= a.width(); ++x) {
                double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
                for (int i = 0; i < win; ++i)
                    for (int j = 0; j < win; ++j) {
                        const double wi = w[i][j] / wsum;
                        const double va = a.at(y + i, x + j, ch);
                        const double vb = b.at(y + i, x + j, ch);
                        sa += wi * va;
                        sb += wi * vb;
                        saa += wi * va * va;
                        sbb += wi * vb * vb;
                        sab += wi * va * vb;
                    }
                const double var_a = saa - sa * sa;
                const double var_b = sbb - sb * sb;
                const double cov = sab - sa * sb;
                total += ((2 * sa * sb + c1) * (2 * cov + c2)) /
                         ((sa * sa + sb * sb + c1) * (var_a + var_b + c2));
                ++count;
            }
    return total / count;
}

} // namespace

TEST_CASE("psnr: identical images give the +infinity sentinel") {
    const Image img = test::textured_image(16, 16, 1);
    CHECK(psnr(img, img) == std::numeric_limits<double>::infinity());
}

TEST_CASE("psnr: off-by-one everywhere gives 20*log10(255)") {
    const Image a = test::textured_image(20, 15, 2);
    Image b = a;
    for (double& v : b.pixels()) v += 1.0;
    CHECK(psnr(a, b) == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-12));
    CHECK(psnr(a, b) == doctest::Approx(48.1308036087).epsilon(1e-9));
}

TEST_CASE("psnr: random pairs match the independent reference") {
    for (std::uint64_t seed : {3u, 4u, 5u}) {
        const Image a = test::random_image(33, 27, seed);
        const Image b = test::random_image(33, 27, seed + 50);
        CHECK(psnr(a, b) == doctest::Approx(reference_psnr(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("psnr and ssim are symmetric") {
    const Image a = test::textured_image(24, 24, 6);
    const Image b = test::add_awgn(a, 10.0, 7);
    CHECK(std::abs(psnr(a, b) - psnr(b, a)) < 1e-12);
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-12);
}

TEST_CASE("psnr decreases as injected noise grows") {
    const Image clean = test::textured_image(32, 32, 8);
    double prev = std::numeric_limits<double>::infinity();
    for (double sigma : {2.0, 5.0, 10.0, 20.0, 40.0}) {
        const double v = psnr(clean, test::add_awgn(clean, sigma, 9));
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("ssim: identical and constant image pairs score 1") {
    const Image img = test::textured_image(16, 16, 10);
    CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));
    Image ca(14, 14), cb(14, 14);
    for (double& v : ca.pixels()) v = 100.0;
    for (double& v : cb.pixels()) v = 100.0;
    CHECK(ssim(ca, cb) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim: fixed 32x32 pair matches the independent reference") {
    const Image a = test::textured_image(32, 32, 11);
    const Image b = test::add_awgn(a, 12.0, 12);
    CHECK(ssim(a, b) == doctest::Approx(reference_ssim(a, b)).epsilon(1e-6));
    const Image c = test::random_image(32, 32, 13);
    CHECK(ssim(a, c) == doctest::Approx(reference_ssim(a, c)).epsilon(1e-6));
}

TEST_CASE("metrics reject mismatched or undersized inputs") {
    const Image a = test::random_image(16, 16, 14);
    const Image b = test::random_image(16, 17, 15);
    CHECK_THROWS_AS(psnr(a, b), DimensionError);
    CHECK_THROWS_AS(ssim(a, b), DimensionError);
    const Image tiny = test::random_image(8, 8, 16);
    CHECK_THROWS_AS(ssim(tiny, tiny), DimensionError);
    CHECK_NOTHROW(psnr(tiny, tiny));
}
