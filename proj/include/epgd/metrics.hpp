#pragma once

#include "epgd/image.hpp"

namespace epgd {

/// PSNR in dB and single-scale SSIM between two images.
struct QualityReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
};

/// Peak signal-to-noise ratio on the [0, 255] scale: 10*log10(255^2 / MSE)
/// with the MSE taken over all pixels and channels. Identical images give
/// +infinity. Throws DimensionError on shape mismatch.
double psnr(const Image& a, const Image& b);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), C1 = (0.01*255)^2,
/// C2 = (0.03*255)^2, averaged over all fully interior window positions and
/// the three channels. Requires min(height, width) >= 11.
double ssim(const Image& a, const Image& b);

inline QualityReport quality(const Image& a, const Image& b) {
    return {psnr(a, b), ssim(a, b)};
}

} // namespace epgd
