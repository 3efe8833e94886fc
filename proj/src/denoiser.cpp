#include "epgd/denoiser.hpp"

#include "epgd/errors.hpp"
#include "epgd/rng.hpp"

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace epgd {

namespace {

Image scaled(const Image& img, double factor) {
    Image out(img.height(), img.width());
    for (std::size_t i = 0; i < img.pixels().size(); ++i)
        out.pixels()[i] = img.pixels()[i] * factor;
    return out;
}

} // namespace

Eigen::VectorXd reconstruct_patch(const HybridDictionary& D, const Eigen::VectorXd& code,
                                  const Eigen::VectorXd& mu) {
    if (code.size() != D.external.cols() + D.internal.cols() || mu.size() != D.dim())
        throw DimensionError("code or mean length does not match the dictionary");
    return D.full() * code + mu;
}

Image denoise(const Image& noisy, const GmmPrior& prior, const DenoiseConfig& cfg,
              const IterationObserver& observer) {
    cfg.validate();
    if (prior.components.empty()) throw TrainingError("prior has no components");
    if (prior.patch_size != cfg.patch_size || prior.dim != cfg.dim())
        throw DimensionError("prior patch size " + std::to_string(prior.patch_size) +
                             " does not match configured patch size " +
                             std::to_string(cfg.patch_size));
    if (noisy.height() < cfg.patch_size || noisy.width() < cfg.patch_size)
        throw DimensionError("image is smaller than the patch size");

    const int K = static_cast<int>(prior.components.size());

    // The prior is trained on [0,1] intensities; run the patch math there.
    Image estimate = scaled(noisy, 1.0 / 255.0);

    for (int ite = 1; ite <= cfg.ite_num; ++ite) {
        const auto t0 = std::chrono::steady_clock::now();

        std::vector<PatchGroup> groups = extract_patch_groups(estimate, cfg);
        const int G = static_cast<int>(groups.size());

        // Guided internal subspace clustering (one MAP component per group).
        std::vector<int> comp_of_group(G);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int g = 0; g < G; ++g) comp_of_group[g] = map_assign(groups[g], prior);

        std::vector<std::vector<int>> clusters(K);
        for (int g = 0; g < G; ++g) clusters[comp_of_group[g]].push_back(g);

        // Guided internal dictionary learning + patch reconstruction,
        // independent across clusters; results land at the original group
        // index so aggregation order never depends on scheduling.
        std::vector<PatchGroup> recon(G);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int k = 0; k < K; ++k) {
            if (clusters[k].empty()) continue;
            std::vector<PatchGroup> cluster;
            cluster.reserve(clusters[k].size());
            for (int g : clusters[k]) cluster.push_back(groups[g]);

            DenoiseConfig local = cfg;
            local.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(k),
                                  static_cast<std::uint64_t>(ite));
            auto [dict, codes] = learn_hybrid_dictionary(
                cluster, prior.components[k].eigenvectors, prior.components[k].eigenvalues,
                local);

            const Eigen::MatrixXd patches = dict.full() * codes;
            Eigen::Index col = 0;
            for (int g : clusters[k]) {
                PatchGroup out;
                const Eigen::Index m = groups[g].members.cols();
                out.members = patches.middleCols(col, m);
                out.members.colwise() += groups[g].mean;
                out.mean = groups[g].mean;
                out.coords = groups[g].coords;
                out.reference_index = groups[g].reference_index;
                recon[g] = std::move(out);
                col += m;
            }
        }

        estimate = aggregate(recon, noisy.height(), noisy.width());

        if (observer) {
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
            observer(ite, scaled(estimate, 255.0), dt.count());
        }
    }

    Image out = scaled(estimate, 255.0);
    for (double v : out.pixels())
        if (!std::isfinite(v)) throw NumericalError("denoised image contains non-finite pixels");
    return out;
}

} // namespace epgd
