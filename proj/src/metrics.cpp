#include "epgd/metrics.hpp"

#include "epgd/errors.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace epgd {

namespace {

void require_same_shape(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw DimensionError("image shapes differ: " + std::to_string(a.height()) + "x" +
                             std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                             "x" + std::to_string(b.width()));
}

constexpr int kWin = 11;

std::array<double, kWin * kWin> gaussian_window() {
    std::array<double, kWin * kWin> w{};
    const double sigma = 1.5;
    double total = 0.0;
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
            const double di = i - (kWin - 1) / 2.0;
            const double dj = j - (kWin - 1) / 2.0;
            w[i * kWin + j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
            total += w[i * kWin + j];
        }
    for (double& v : w) v /= total;
    return w;
}

} // namespace

double psnr(const Image& a, const Image& b) {
    require_same_shape(a, b);
    const auto& pa = a.pixels();
    const auto& pb = b.pixels();
    double se = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double d = pa[i] - pb[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(pa.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const Image& a, const Image& b) {
    require_same_shape(a, b);
    if (a.height() < kWin || a.width() < kWin)
        throw DimensionError("ssim needs images at least " + std::to_string(kWin) + " pixels on a side");

    static const std::array<double, kWin * kWin> w = gaussian_window();
    const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    const double c2 = (0.03 * 255.0) * (0.03 * 255.0);

    double total = 0.0;
    std::size_t count = 0;
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y + kWin <= a.height(); ++y)
            for (int x = 0; x + kWin <= a.width(); ++x) {
                double mu_a = 0.0, mu_b = 0.0;
                for (int i = 0; i < kWin; ++i)
                    for (int j = 0; j < kWin; ++j) {
                        const double wij = w[i * kWin + j];
                        mu_a += wij * a.at(y + i, x + j, ch);
                        mu_b += wij * b.at(y + i, x + j, ch);
                    }
                double var_a = 0.0, var_b = 0.0, cov = 0.0;
                for (int i = 0; i < kWin; ++i)
                    for (int j = 0; j < kWin; ++j) {
                        const double wij = w[i * kWin + j];
                        const double da = a.at(y + i, x + j, ch) - mu_a;
                        const double db = b.at(y + i, x + j, ch) - mu_b;
                        var_a += wij * da * da;
                        var_b += wij * db * db;
                        cov += wij * da * db;
                    }
                const double s = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                                 ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                total += s;
                ++count;
            }
    return total / static_cast<double>(count);
}

} // namespace epgd
