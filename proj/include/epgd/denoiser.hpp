#pragma once

#include "epgd/config.hpp"
#include "epgd/dictionary.hpp"
#include "epgd/gmm.hpp"
#include "epgd/image.hpp"

#include <functional>

namespace epgd {

/// Latent clean patch from its code: D * code + mu.
Eigen::VectorXd reconstruct_patch(const HybridDictionary& D, const Eigen::VectorXd& code,
                                  const Eigen::VectorXd& mu);

/// Called after each outer iteration with the 1-based iteration number,
/// the current pixel-scale estimate and the iteration's wall time.
using IterationObserver = std::function<void(int, const Image&, double)>;

/// Full denoising pipeline. Starting from the noisy image, each of
/// cfg.ite_num iterations re-extracts patch groups from the current
/// estimate, assigns every group to its best prior component, learns one
/// hybrid dictionary per nonempty cluster, reconstructs all member patches
/// and aggregates them into the next estimate. Patch-domain math runs on
/// intensities normalized to [0, 1]; the returned image is back on the
/// [0, 255] scale and is never clamped.
Image denoise(const Image& noisy, const GmmPrior& prior, const DenoiseConfig& cfg,
              const IterationObserver& observer = {});

} // namespace epgd
