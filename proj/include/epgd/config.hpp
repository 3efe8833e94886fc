#pragma once

#include <cstdint>

namespace epgd {

/// Tunables of the denoising pipeline. Defaults follow the reference
/// parameterization: 6x6 color patches, 10-patch groups found in a 31x31
/// search window, a 32-component prior, 54 external atoms, lambda = 0.001,
/// 2 dictionary-learning sweeps inside each of 4 outer iterations.
struct DenoiseConfig {
    int patch_size = 6;       ///< p: side of the square patch
    int group_size = 10;      ///< M: patches per group (incl. the reference)
    int window = 31;          ///< W: search window side, odd
    int mixture_size = 32;    ///< K: Gaussian components in the prior
    int external_atoms = 54;  ///< r: leading eigenvectors kept frozen
    double lambda = 0.001;    ///< sparse regularization weight
    double eps = 1e-6;        ///< guard added to sqrt(eigenvalue) in thresholds
    int dict_iters = 2;       ///< T: coding/dictionary alternations
    int ite_num = 4;          ///< outer denoising iterations
    int stride = 3;           ///< reference-patch step in pixels
    std::uint64_t seed = 0;   ///< drives every random choice in the pipeline

    int dim() const { return 3 * patch_size * patch_size; }

    /// Throws std::invalid_argument if any field is outside its domain
    /// (W must be odd, stride in [1, p], 0 <= r <= 3p^2, T >= 0, rest >= 1).
    void validate() const;
};

} // namespace epgd
