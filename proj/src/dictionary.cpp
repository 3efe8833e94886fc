#include "epgd/dictionary.hpp"

#include "epgd/errors.hpp"
#include "epgd/rng.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <string>

namespace epgd {

namespace {

void canonicalize_svd_signs(Eigen::MatrixXd& U, Eigen::MatrixXd& V) {
    for (Eigen::Index c = 0; c < U.cols(); ++c) {
        Eigen::Index best = 0;
        double mag = -1.0;
        for (Eigen::Index r = 0; r < U.rows(); ++r) {
            const double a = std::abs(U(r, c));
            if (a > mag) {
                mag = a;
                best = r;
            }
        }
        if (U(best, c) < 0.0) {
            U.col(c) = -U.col(c);
            V.col(c) = -V.col(c);
        }
    }
}

// One modified Gram-Schmidt sweep of the columns of M against the columns
// of guard (if any) and against each other, normalizing as it goes.
void orthonormalize_against(const Eigen::MatrixXd& guard, Eigen::MatrixXd& M) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
        if (guard.cols() > 0) M.col(c) -= guard * (guard.transpose() * M.col(c));
        for (Eigen::Index j = 0; j < c; ++j) M.col(c) -= M.col(j) * M.col(j).dot(M.col(c));
        const double n = M.col(c).norm();
        if (n < 1e-12)
            throw NumericalError("orthonormalization collapsed a dictionary column");
        M.col(c) /= n;
    }
}

} // namespace

Eigen::MatrixXd HybridDictionary::full() const {
    Eigen::MatrixXd D(dim(), external.cols() + internal.cols());
    if (external.cols() > 0) D.leftCols(external.cols()) = external;
    if (internal.cols() > 0) D.rightCols(internal.cols()) = internal;
    return D;
}

Eigen::VectorXd build_lambda(const Eigen::VectorXd& eigenvalues, double lam, double eps) {
    if (lam < 0.0) throw std::invalid_argument("lambda must be >= 0");
    if (eps <= 0.0) throw std::invalid_argument("eps must be > 0");
    return ((0.5 * lam) / (eigenvalues.array().max(0.0).sqrt() + eps)).matrix();
}

SparseCodes soft_threshold_codes(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y,
                                 const Eigen::VectorXd& thr) {
    SparseCodes A = D.transpose() * Y;
    for (Eigen::Index c = 0; c < A.cols(); ++c)
        for (Eigen::Index j = 0; j < A.rows(); ++j) {
            const double z = A(j, c);
            const double shrunk = std::abs(z) - thr[j];
            A(j, c) = shrunk > 0.0 ? (z > 0.0 ? shrunk : -shrunk) : 0.0;
        }
    return A;
}

Eigen::VectorXd weighted_soft_threshold(const HybridDictionary& D, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& thr) {
    return soft_threshold_codes(D.full(), y, thr);
}

double coding_objective(const Eigen::MatrixXd& D, const Eigen::MatrixXd& Y,
                        const SparseCodes& A, const Eigen::VectorXd& thr) {
    const double fit = (Y - D * A).squaredNorm();
    const double penalty = (2.0 * thr).dot(A.cwiseAbs().rowwise().sum());
    return fit + penalty;
}

Eigen::MatrixXd update_internal_dict(const Eigen::MatrixXd& D_E, const Eigen::MatrixXd& Y,
                                     const Eigen::MatrixXd& A_I, const DictUpdateOptions& opts) {
    const Eigen::Index d = Y.rows();
    const Eigen::Index r = D_E.cols();
    const Eigen::Index ni = d - r;
    if (r > 0 && D_E.rows() != d)
        throw DimensionError("external sub-dictionary row count does not match patches");
    if (A_I.rows() != ni)
        throw DimensionError("internal code rows " + std::to_string(A_I.rows()) +
                             " != " + std::to_string(ni));
    if (A_I.cols() != Y.cols())
        throw DimensionError("code and patch column counts differ");
    if (r > 0) {
        const double ext_res =
            (D_E.transpose() * D_E - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff();
        if (ext_res > 1e-6)
            throw std::invalid_argument("external sub-dictionary is not orthonormal");
    }
    if (ni == 0) return Eigen::MatrixXd(d, 0);

    // (I - D_E D_E^T) Y A_I^T without forming the d x d projector.
    Eigen::MatrixXd B = Y * A_I.transpose();
    if (r > 0) B -= D_E * (D_E.transpose() * B);

    Eigen::MatrixXd U, V;
    Eigen::VectorXd sv;
    if (opts.backend == SvdBackend::Jacobi) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
        U = svd.matrixU();
        V = svd.matrixV();
        sv = svd.singularValues();
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
        U = svd.matrixU();
        V = svd.matrixV();
        sv = svd.singularValues();
    }
    canonicalize_svd_signs(U, V);

    Eigen::Index rank = 0;
    while (rank < sv.size() && sv[rank] > opts.rank_tol) ++rank;

    bool completed = false;
    if (rank < ni) {
        // Null directions are free: any orthonormal completion of the
        // complement of [D_E, U_nonzero] is optimal. Pick a seeded one.
        Eigen::MatrixXd guard(d, r + rank);
        if (r > 0) guard.leftCols(r) = D_E;
        guard.rightCols(rank) = U.leftCols(rank);

        Rng rng(opts.completion_seed);
        for (Eigen::Index c = rank; c < ni; ++c) {
            Eigen::VectorXd v(d);
            double norm = 0.0;
            for (int attempt = 0; attempt < 64; ++attempt) {
                for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
                v -= guard * (guard.transpose() * v);
                for (Eigen::Index j = rank; j < c; ++j) v -= U.col(j) * U.col(j).dot(v);
                norm = v.norm();
                if (norm > 1e-6) break;
            }
            if (norm <= 1e-6)
                throw NumericalError("could not complete an orthonormal basis");
            U.col(c) = v / norm;
        }
        completed = true;
    }

    Eigen::MatrixXd D_I = U * V.transpose();
    if (completed) orthonormalize_against(D_E, D_I);

    auto residual = [&]() {
        double res = (D_I.transpose() * D_I - Eigen::MatrixXd::Identity(ni, ni))
                         .cwiseAbs()
                         .maxCoeff();
        if (r > 0) res = std::max(res, (D_E.transpose() * D_I).cwiseAbs().maxCoeff());
        return res;
    };
    double res = residual();
    if (res > 1e-8) {
        orthonormalize_against(D_E, D_I);
        res = residual();
    }
    if (res > 1e-6)
        throw NumericalError("internal dictionary constraints violated by " +
                             std::to_string(res));
    return D_I;
}

std::pair<HybridDictionary, SparseCodes> learn_hybrid_dictionary(
    const std::vector<PatchGroup>& cluster, const Eigen::MatrixXd& U_k,
    const Eigen::VectorXd& S_k, const DenoiseConfig& cfg,
    std::vector<double>* objective_trace) {
    if (cluster.empty()) throw std::invalid_argument("cluster has no patch groups");
    const Eigen::Index d = U_k.rows();
    if (U_k.cols() != d) throw DimensionError("guide dictionary must be square");
    if (S_k.size() != d) throw DimensionError("eigenvalue vector length mismatch");
    const Eigen::Index r = cfg.external_atoms;
    if (r < 0 || r > d) throw std::invalid_argument("external atom count outside [0, dim]");

    Eigen::Index total = 0;
    for (const auto& g : cluster) {
        if (g.members.rows() != d) throw DimensionError("cluster patches disagree with dictionary");
        total += g.members.cols();
    }
    Eigen::MatrixXd Y(d, total);
    Eigen::Index c = 0;
    for (const auto& g : cluster) {
        Y.middleCols(c, g.members.cols()) = g.members;
        c += g.members.cols();
    }

    HybridDictionary dict;
    dict.external = U_k.leftCols(r);
    dict.internal = U_k.rightCols(d - r);
    dict.lambda = build_lambda(S_k, cfg.lambda, cfg.eps);

    Eigen::MatrixXd D = dict.full();
    SparseCodes A = soft_threshold_codes(D, Y, dict.lambda);
    if (objective_trace) objective_trace->push_back(coding_objective(D, Y, A, dict.lambda));

    // Alternate the two exact minimizers, then recode once against the final
    // dictionary so the returned pair is consistent (D alpha reproduces the
    // patches exactly when all thresholds are zero).
    for (int t = 0; t < cfg.dict_iters; ++t) {
        DictUpdateOptions opts;
        opts.completion_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(t) + 1);
        dict.internal = update_internal_dict(dict.external, Y, A.bottomRows(d - r), opts);
        D = dict.full();
        if (objective_trace)
            objective_trace->push_back(coding_objective(D, Y, A, dict.lambda));

        A = soft_threshold_codes(D, Y, dict.lambda);
        if (objective_trace)
            objective_trace->push_back(coding_objective(D, Y, A, dict.lambda));
    }
    return {std::move(dict), std::move(A)};
}

} // namespace epgd
