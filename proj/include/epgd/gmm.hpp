#pragma once

#include "epgd/patch_group.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace epgd {

/// One zero-mean Gaussian component of the patch-group prior.
struct GmmComponent {
    double weight = 1.0;          ///< pi_k
    Eigen::MatrixXd covariance;   ///< d x d symmetric PSD
    Eigen::MatrixXd eigenvectors; ///< U_k, columns ordered like eigenvalues
    Eigen::VectorXd eigenvalues;  ///< S_k, nonincreasing, floored positive
};

/// Zero-mean Gaussian mixture over mean-subtracted patch groups,
/// components sorted by descending weight.
struct GmmPrior {
    int patch_size = 0; ///< p; dim == 3p^2 for image priors
    int dim = 0;
    std::vector<GmmComponent> components;
};

struct EmOptions {
    int max_iters = 100;
    double rel_tol = 1e-4;       ///< stop when relative log-likelihood gain drops below
    std::uint64_t seed = 0;      ///< drives the random responsibility initialization
    double cov_reg = 1e-3;       ///< delta added to every covariance diagonal (pixel scale)
    double eigen_floor = 1e-6;   ///< lower bound applied to eigenvalues
};

struct TrainStats {
    std::vector<double> log_likelihood; ///< objective after each E-step
    int iterations = 0;
};

/// Fits the mixture by EM, treating the M members of each group as i.i.d.
/// draws from the group's component. Covariances receive +delta*I each
/// M-step; components are returned sorted by weight and eigendecomposed.
/// Throws TrainingError when K exceeds the number of groups.
GmmPrior train_gmm(const std::vector<PatchGroup>& groups, int K,
                   const EmOptions& opts = {}, TrainStats* stats = nullptr);

/// Recomputes U_k, S_k for one component: eigenvalues clamped to
/// [floor, inf), sorted nonincreasing, each eigenvector's sign fixed so its
/// largest-magnitude entry (first on ties) is positive. The stored
/// covariance is replaced by U S U^T so factors and matrix stay consistent.
/// Throws CorruptionError if the covariance is not symmetric.
void eigendecompose(GmmComponent& comp, double eigen_floor = 1e-6);

/// eigendecompose() applied to every component of the prior.
void eigendecompose(GmmPrior& prior, double eigen_floor = 1e-6);

/// log N(x | 0, Sigma) for each column of X, evaluated through the
/// component's eigenfactors. Finite for any input thanks to the floor.
Eigen::VectorXd column_log_densities(const GmmComponent& comp, const Eigen::MatrixXd& X);

/// Sum of member log-densities under one component (the log of the
/// group-level product likelihood).
double log_group_likelihood(const PatchGroup& group, const GmmComponent& comp);

/// Index of the component maximizing log pi_k + log_group_likelihood;
/// the shared posterior denominator cancels. Ties go to the smaller index.
int map_assign(const PatchGroup& group, const GmmPrior& prior);

/// Binary prior file ("EPGM", version 1, little-endian; see README).
void save_prior(const GmmPrior& prior, const std::string& path);
GmmPrior load_prior(const std::string& path);

} // namespace epgd
