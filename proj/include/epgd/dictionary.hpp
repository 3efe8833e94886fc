#pragma once

#include "epgd/config.hpp"
#include "epgd/patch_group.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

namespace epgd {

/// Orthogonal dictionary D = [external internal]: the external block holds
/// the leading eigenvectors of a prior component and stays frozen, the
/// internal block is learned from the image. `lambda` carries the halved
/// per-atom thresholds used by the closed-form coding step.
struct HybridDictionary {
    Eigen::MatrixXd external; ///< d x r
    Eigen::MatrixXd internal; ///< d x (d - r)
    Eigen::VectorXd lambda;   ///< d soft thresholds, nonnegative

    int dim() const { return static_cast<int>(external.rows() ? external.rows() : internal.rows()); }
    int external_atoms() const { return static_cast<int>(external.cols()); }

    /// Concatenated d x d dictionary.
    Eigen::MatrixXd full() const;
};

/// Sparse coefficient matrix; one column per coded patch, in cluster order.
using SparseCodes = Eigen::MatrixXd;

enum class SvdBackend { Bdc, Jacobi };

struct DictUpdateOptions {
    SvdBackend backend = SvdBackend::Bdc;
    double rank_tol = 1e-6;             ///< singular values at or below are null
    std::uint64_t completion_seed = 0;  ///< seeds the null-direction completion
};

/// Per-atom soft thresholds 0.5 * lam / (sqrt(S_j) + eps) from a
/// component's eigenvalue vector. Larger eigenvalues (more significant
/// atoms) get smaller thresholds.
Eigen::VectorXd build_lambda(const Eigen::VectorXd& eigenvalues, double lam, double eps);

/// Closed-form minimizer of ||y - D a||^2 + sum_j 2*thr_j |a_j| for an
/// orthogonal dictionary: a = sgn(z) .* max(|z| - thr, 0) with z = D^T y.
Eigen::VectorXd weighted_soft_threshold(const HybridDictionary& D, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& thr);

/// Batched form of the coding step: one column of codes per column of Y.
SparseCodes soft_threshold_codes(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y,
                                 const Eigen::VectorXd& thr);

/// Solves min ||Y - [D_E D_I] A||_F^2 over D_I subject to D_I^T D_I = I and
/// D_E^T D_I = 0: the closed form is U V^T from the reduced SVD of
/// (I - D_E D_E^T) Y A_I^T. Left singular vector signs are canonicalized
/// (largest-magnitude entry positive) with the matching flip applied on the
/// right. Null directions (singular value <= rank_tol) are filled with a
/// seeded orthonormal completion of the complement of [D_E, U_nonzero] and
/// the result re-orthonormalized. Throws NumericalError if the constraint
/// residual exceeds 1e-6.
Eigen::MatrixXd update_internal_dict(const Eigen::MatrixXd& D_E, const Eigen::MatrixXd& Y,
                                     const Eigen::MatrixXd& A_I,
                                     const DictUpdateOptions& opts = {});

/// Dictionary-learning objective: ||Y - D A||_F^2 + sum_j 2*thr_j * ||A row j||_1.
double coding_objective(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y,
                        const SparseCodes& A, const Eigen::VectorXd& thr);

/// Alternates closed-form coding and the internal-dictionary update,
/// starting from D = U_k, for cfg.dict_iters rounds. Returns the final
/// dictionary and the codes from the last coding step. When a trace vector
/// is supplied the objective value after every half-step is appended to it.
std::pair<HybridDictionary, SparseCodes> learn_hybrid_dictionary(
    const std::vector<PatchGroup>& cluster, const Eigen::MatrixXd& U_k,
    const Eigen::VectorXd& S_k, const DenoiseConfig& cfg,
    std::vector<double>* objective_trace = nullptr);

} // namespace epgd
