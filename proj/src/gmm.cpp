#include "epgd/gmm.hpp"

#include "epgd/errors.hpp"
#include "epgd/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

namespace epgd {

static_assert(std::endian::native == std::endian::little,
              "prior files are little-endian; byte swapping is not implemented");

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Flips eigenvector/singular-vector columns so the largest-magnitude entry
// (first of them on ties) is positive. Shared with the dictionary update.
void canonicalize_column_sign(Eigen::Ref<Eigen::MatrixXd> U, Eigen::MatrixXd* paired) {
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
            if (paired && c < paired->cols()) paired->col(c) = -paired->col(c);
        }
    }
}

struct FlatData {
    Eigen::MatrixXd X;              // d x total member columns
    std::vector<int> group_of_col;  // which group each column belongs to
    std::vector<int> group_sizes;   // member count per group
};

FlatData flatten(const std::vector<PatchGroup>& groups, int dim) {
    FlatData f;
    Eigen::Index total = 0;
    for (const auto& g : groups) {
        if (g.members.rows() != dim)
            throw DimensionError("patch groups disagree on dimension: " +
                                 std::to_string(g.members.rows()) + " vs " +
                                 std::to_string(dim));
        total += g.members.cols();
    }
    f.X.resize(dim, total);
    f.group_of_col.resize(static_cast<std::size_t>(total));
    f.group_sizes.resize(groups.size());
    Eigen::Index c = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const Eigen::Index m = groups[g].members.cols();
        f.X.middleCols(c, m) = groups[g].members;
        std::fill_n(f.group_of_col.begin() + c, m, static_cast<int>(g));
        f.group_sizes[g] = static_cast<int>(m);
        c += m;
    }
    return f;
}

// Per-column log N(x|0,Sigma) for a column block, using precomputed factors.
void block_log_densities(const Eigen::MatrixXd& U, const Eigen::VectorXd& inv_s,
                         double log_norm, const Eigen::Ref<const Eigen::MatrixXd>& X,
                         Eigen::Ref<Eigen::VectorXd> out) {
    const Eigen::MatrixXd Z = U.transpose() * X;
    const Eigen::VectorXd quad =
        (inv_s.asDiagonal() * Z.cwiseProduct(Z)).colwise().sum().transpose();
    out = (-0.5 * quad.array() + log_norm).matrix();
}

} // namespace

void eigendecompose(GmmComponent& comp, double eigen_floor) {
    const Eigen::MatrixXd& S = comp.covariance;
    if (S.rows() != S.cols() || S.rows() == 0)
        throw DimensionError("covariance must be square and non-empty");
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9 * scale)
        throw CorruptionError("covariance asymmetric by " + std::to_string(asym) +
                              "; data is corrupt");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        ((S + S.transpose()) * 0.5).eval());
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigendecomposition did not converge");

    const Eigen::Index d = S.rows();
    comp.eigenvalues.resize(d);
    comp.eigenvectors.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) { // ascending -> nonincreasing
        comp.eigenvalues[i] = std::max(solver.eigenvalues()[d - 1 - i], eigen_floor);
        comp.eigenvectors.col(i) = solver.eigenvectors().col(d - 1 - i);
    }
    canonicalize_column_sign(comp.eigenvectors, nullptr);

    // Re-expand so the stored covariance matches the (floored) factors.
    Eigen::MatrixXd rebuilt =
        comp.eigenvectors * comp.eigenvalues.asDiagonal() * comp.eigenvectors.transpose();
    comp.covariance = ((rebuilt + rebuilt.transpose()) * 0.5).eval();
}

void eigendecompose(GmmPrior& prior, double eigen_floor) {
    for (auto& comp : prior.components) eigendecompose(comp, eigen_floor);
}

Eigen::VectorXd column_log_densities(const GmmComponent& comp, const Eigen::MatrixXd& X) {
    if (comp.eigenvectors.rows() != X.rows())
        throw DimensionError("component dimension " + std::to_string(comp.eigenvectors.rows()) +
                             " does not match patch dimension " + std::to_string(X.rows()));
    const Eigen::Index d = X.rows();
    const Eigen::VectorXd inv_s = comp.eigenvalues.cwiseInverse();
    const double log_det = comp.eigenvalues.array().log().sum();
    const double log_norm = -0.5 * (static_cast<double>(d) * kLog2Pi + log_det);
    Eigen::VectorXd out(X.cols());
    block_log_densities(comp.eigenvectors, inv_s, log_norm, X, out);
    return out;
}

double log_group_likelihood(const PatchGroup& group, const GmmComponent& comp) {
    return column_log_densities(comp, group.members).sum();
}

int map_assign(const PatchGroup& group, const GmmPrior& prior) {
    if (prior.components.empty()) throw TrainingError("prior has no components");
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < prior.components.size(); ++k) {
        const double score = std::log(prior.components[k].weight) +
                             log_group_likelihood(group, prior.components[k]);
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(k);
        }
    }
    return best;
}

GmmPrior train_gmm(const std::vector<PatchGroup>& groups, int K, const EmOptions& opts,
                   TrainStats* stats) {
    if (K < 1) throw TrainingError("component count must be >= 1");
    if (groups.empty()) throw TrainingError("no patch groups to train on");
    if (static_cast<std::size_t>(K) > groups.size())
        throw TrainingError("degenerate clustering: " + std::to_string(K) +
                            " components but only " + std::to_string(groups.size()) +
                            " patch groups");

    const int dim = static_cast<int>(groups[0].members.rows());
    const FlatData data = flatten(groups, dim);
    const Eigen::Index G = static_cast<Eigen::Index>(groups.size());
    const Eigen::Index total = data.X.cols();
    constexpr Eigen::Index kBlock = 4096;

    // Random responsibilities, normalized per group.
    Eigen::MatrixXd resp(G, K);
    {
        Rng rng(opts.seed);
        for (Eigen::Index g = 0; g < G; ++g) {
            double row_sum = 0.0;
            for (int k = 0; k < K; ++k) {
                const double u = rng.uniform() + 1e-12;
                resp(g, k) = u;
                row_sum += u;
            }
            resp.row(g) /= row_sum;
        }
    }

    std::vector<GmmComponent> comps(K);
    Eigen::VectorXd log_norm(K);
    std::vector<Eigen::VectorXd> inv_s(K);

    auto m_step = [&]() {
        for (int k = 0; k < K; ++k) {
            const double resp_sum = resp.col(k).sum();
            comps[k].weight = resp_sum / static_cast<double>(G);

            Eigen::MatrixXd second(dim, dim);
            second.setZero();
            double patch_weight = 0.0;
            for (Eigen::Index c0 = 0; c0 < total; c0 += kBlock) {
                const Eigen::Index n = std::min(kBlock, total - c0);
                Eigen::MatrixXd B = data.X.middleCols(c0, n);
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double w = resp(data.group_of_col[c0 + j], k);
                    B.col(j) *= std::sqrt(w);
                    patch_weight += w;
                }
                second.selfadjointView<Eigen::Lower>().rankUpdate(B, 1.0);
            }
            second = second.selfadjointView<Eigen::Lower>();
            comps[k].covariance = second / std::max(patch_weight, 1e-300);
            comps[k].covariance.diagonal().array() += opts.cov_reg;
            eigendecompose(comps[k], opts.eigen_floor);
            inv_s[k] = comps[k].eigenvalues.cwiseInverse();
            log_norm[k] = -0.5 * (static_cast<double>(dim) * kLog2Pi +
                                  comps[k].eigenvalues.array().log().sum());
        }
    };

    // E-step: per-group component scores log pi_k + sum_m log N(x_m|0,Sigma_k).
    Eigen::MatrixXd scores(G, K);
    Eigen::VectorXd col_dens(total);
    auto e_step = [&]() -> double {
        for (int k = 0; k < K; ++k) {
            for (Eigen::Index c0 = 0; c0 < total; c0 += kBlock) {
                const Eigen::Index n = std::min(kBlock, total - c0);
                block_log_densities(comps[k].eigenvectors, inv_s[k], log_norm[k],
                                    data.X.middleCols(c0, n), col_dens.segment(c0, n));
            }
            scores.col(k).setConstant(std::log(comps[k].weight));
            for (Eigen::Index c = 0; c < total; ++c)
                scores(data.group_of_col[c], k) += col_dens[c];
        }
        double ll = 0.0;
        for (Eigen::Index g = 0; g < G; ++g) {
            const double hi = scores.row(g).maxCoeff();
            double lse = 0.0;
            for (int k = 0; k < K; ++k) lse += std::exp(scores(g, k) - hi);
            lse = hi + std::log(lse);
            ll += lse;
            for (int k = 0; k < K; ++k) resp(g, k) = std::exp(scores(g, k) - lse);
        }
        return ll;
    };

    m_step();
    double prev_ll = -std::numeric_limits<double>::infinity();
    int iter = 0;
    for (; iter < opts.max_iters; ++iter) {
        const double ll = e_step();
        if (stats) stats->log_likelihood.push_back(ll);
        if (iter > 0) {
            const double rel = (ll - prev_ll) / std::max(std::abs(prev_ll), 1e-300);
            if (rel < opts.rel_tol) {
                prev_ll = ll;
                ++iter;
                break;
            }
        }
        prev_ll = ll;
        m_step();
    }
    if (stats) stats->iterations = iter;

    // Deterministic presentation: heaviest component first.
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return comps[a].weight > comps[b].weight; });

    GmmPrior prior;
    prior.dim = dim;
    prior.patch_size = static_cast<int>(std::lround(std::sqrt(dim / 3.0)));
    if (3 * prior.patch_size * prior.patch_size != dim) prior.patch_size = 0;
    prior.components.reserve(K);
    for (int k : order) prior.components.push_back(std::move(comps[k]));
    return prior;
}

namespace {

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n, const std::string& path) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw TruncationError(path + ": prior file truncated");
}

void check_finite(const double* p, std::size_t n, const std::string& path) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(p[i]))
            throw FormatError(path + ": prior file contains non-finite values");
}

} // namespace

void save_prior(const GmmPrior& prior, const std::string& path) {
    if (prior.patch_size < 1 || prior.dim != 3 * prior.patch_size * prior.patch_size)
        throw std::invalid_argument("prior dimension is not 3p^2; cannot serialize");
    if (prior.components.empty()) throw std::invalid_argument("prior has no components");
    for (const auto& c : prior.components)
        if (c.eigenvectors.rows() != prior.dim || c.eigenvectors.cols() != prior.dim ||
            c.eigenvalues.size() != prior.dim || c.covariance.rows() != prior.dim ||
            c.covariance.cols() != prior.dim)
            throw DimensionError("component factors missing or of wrong dimension");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open for writing");

    out.write("EPGM", 4);
    const std::uint32_t version = 1;
    const std::uint32_t p = static_cast<std::uint32_t>(prior.patch_size);
    const std::uint32_t k = static_cast<std::uint32_t>(prior.components.size());
    write_bytes(out, &version, 4);
    write_bytes(out, &p, 4);
    write_bytes(out, &k, 4);

    const std::size_t d = static_cast<std::size_t>(prior.dim);
    for (const auto& c : prior.components) {
        write_bytes(out, &c.weight, 8);
        write_bytes(out, c.eigenvalues.data(), d * 8);
        write_bytes(out, c.eigenvectors.data(), d * d * 8); // column-major
        write_bytes(out, c.covariance.data(), d * d * 8);   // column-major
    }
    if (!out) throw IoError(path + ": write failed");
}

GmmPrior load_prior(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open file");

    char magic[4];
    read_bytes(in, magic, 4, path);
    if (std::memcmp(magic, "EPGM", 4) != 0)
        throw FormatError(path + ": bad magic (expected \"EPGM\")");

    std::uint32_t version = 0, p = 0, k = 0;
    read_bytes(in, &version, 4, path);
    if (version != 1)
        throw FormatError(path + ": unsupported prior version " + std::to_string(version));
    read_bytes(in, &p, 4, path);
    read_bytes(in, &k, 4, path);
    if (p < 1 || p > 256) throw FormatError(path + ": implausible patch size " + std::to_string(p));
    if (k < 1 || k > 65536)
        throw FormatError(path + ": implausible component count " + std::to_string(k));

    GmmPrior prior;
    prior.patch_size = static_cast<int>(p);
    prior.dim = 3 * prior.patch_size * prior.patch_size;
    const std::size_t d = static_cast<std::size_t>(prior.dim);
    prior.components.resize(k);
    for (auto& c : prior.components) {
        read_bytes(in, &c.weight, 8, path);
        c.eigenvalues.resize(prior.dim);
        c.eigenvectors.resize(prior.dim, prior.dim);
        c.covariance.resize(prior.dim, prior.dim);
        read_bytes(in, c.eigenvalues.data(), d * 8, path);
        read_bytes(in, c.eigenvectors.data(), d * d * 8, path);
        read_bytes(in, c.covariance.data(), d * d * 8, path);
        check_finite(&c.weight, 1, path);
        check_finite(c.eigenvalues.data(), d, path);
        check_finite(c.eigenvectors.data(), d * d, path);
        check_finite(c.covariance.data(), d * d, path);
    }
    if (in.peek() != std::ifstream::traits_type::eof())
        throw FormatError(path + ": file is larger than its declared contents");
    return prior;
}

} // namespace epgd
