#include "epgd/denoiser.hpp"
#include "epgd/errors.hpp"
#include "epgd/metrics.hpp"

#include "support/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

using namespace epgd;

namespace {

// A small but real prior: p=3 patches from one textured image, scaled to
// [0,1] like the production trainer does.
GmmPrior small_prior(int K, std::uint64_t seed) {
    const Image img = test::textured_image(72, 72, seed);
    Image unit(img.height(), img.width());
    for (std::size_t i = 0; i < img.pixels().size(); ++i)
        unit.pixels()[i] = img.pixels()[i] / 255.0;

    DenoiseConfig cfg = {};
    cfg.patch_size = 3;
    cfg.group_size = 6;
    cfg.window = 11;
    cfg.stride = 3;
    const auto groups = extract_patch_groups(unit, cfg);

    EmOptions opts;
    opts.seed = seed;
    opts.max_iters = 20;
    opts.cov_reg = 1e-3 / (255.0 * 255.0);
    opts.eigen_floor = 1e-6;
    GmmPrior prior = train_gmm(groups, K, opts);
    eigendecompose(prior, opts.eigen_floor);
    return prior;
}

DenoiseConfig small_cfg() {
    DenoiseConfig cfg;
    cfg.patch_size = 3;
    cfg.group_size = 6;
    cfg.window = 11;
    cfg.external_atoms = 13;
    cfg.dict_iters = 2;
    cfg.ite_num = 2;
    cfg.stride = 2;
    return cfg;
}

} // namespace

TEST_CASE("reconstruct_patch: zero code returns the group mean") {
    Rng rng(20);
    HybridDictionary dict;
    const Eigen::MatrixXd Q = test::random_orthogonal(6, rng);
    dict.external = Q.leftCols(2);
    dict.internal = Q.rightCols(4);
    Eigen::VectorXd mu(6);
    for (int i = 0; i < 6; ++i) mu[i] = rng.uniform(0.0, 1.0);
    const Eigen::VectorXd out = reconstruct_patch(dict, Eigen::VectorXd::Zero(6), mu);
    CHECK((out - mu).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reconstruct_patch: zero thresholds give back the original patch") {
    Rng rng(21);
    HybridDictionary dict;
    const Eigen::MatrixXd Q = test::random_orthogonal(8, rng);
    dict.external = Q.leftCols(3);
    dict.internal = Q.rightCols(5);
    Eigen::VectorXd patch(8), mu(8);
    for (int i = 0; i < 8; ++i) {
        patch[i] = rng.uniform(0.0, 1.0);
        mu[i] = rng.uniform(0.0, 1.0);
    }
    const Eigen::VectorXd ybar = patch - mu;
    const Eigen::VectorXd code =
        weighted_soft_threshold(dict, ybar, Eigen::VectorXd::Zero(8));
    const Eigen::VectorXd out = reconstruct_patch(dict, code, mu);
    CHECK((out - patch).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("reconstruct_patch matches dense evaluation") {
    Rng rng(22);
    HybridDictionary dict;
    const Eigen::MatrixXd Q = test::random_orthogonal(9, rng);
    dict.external = Q.leftCols(4);
    dict.internal = Q.rightCols(5);
    Eigen::VectorXd code(9), mu(9);
    for (int i = 0; i < 9; ++i) {
        code[i] = rng.normal();
        mu[i] = rng.normal();
    }
    Eigen::VectorXd want = mu;
    for (int j = 0; j < 9; ++j) want += Q.col(j) * code[j];
    const Eigen::VectorXd got = reconstruct_patch(dict, code, mu);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("denoise with lambda=0 is the identity") {
    const GmmPrior prior = small_prior(2, 30);
    const Image img = test::textured_image(26, 24, 31);
    DenoiseConfig cfg = small_cfg();
    cfg.lambda = 0.0;
    const Image out = denoise(img, prior, cfg);
    REQUIRE(out.same_shape(img));
    double max_err = 0.0;
    for (std::size_t i = 0; i < out.pixels().size(); ++i)
        max_err = std::max(max_err, std::abs(out.pixels()[i] - img.pixels()[i]));
    CHECK(max_err <= 1e-9);
}

TEST_CASE("denoise is deterministic bit for bit") {
    const GmmPrior prior = small_prior(2, 32);
    const Image noisy = test::add_awgn(test::textured_image(25, 27, 33), 20.0, 34);
    const DenoiseConfig cfg = small_cfg();
    const Image a = denoise(noisy, prior, cfg);
    const Image b = denoise(noisy, prior, cfg);
    CHECK(std::memcmp(a.pixels().data(), b.pixels().data(),
                      sizeof(double) * a.pixels().size()) == 0);
}

TEST_CASE("denoise output is finite and improves a noisy textured image") {
    const GmmPrior prior = small_prior(3, 35);
    const Image clean = test::textured_image(32, 32, 36);
    const Image noisy = test::add_awgn(clean, 25.0, 37);
    const Image out = denoise(noisy, prior, small_cfg());
    for (double v : out.pixels()) CHECK(std::isfinite(v));
    CHECK(psnr(out, clean) > psnr(noisy, clean));
}

TEST_CASE("denoise invokes the observer once per outer iteration") {
    const GmmPrior prior = small_prior(2, 38);
    const Image noisy = test::add_awgn(test::textured_image(20, 20, 39), 10.0, 40);
    DenoiseConfig cfg = small_cfg();
    cfg.ite_num = 3;
    std::vector<int> seen;
    denoise(noisy, prior, cfg, [&](int ite, const Image& est, double secs) {
        seen.push_back(ite);
        CHECK(est.same_shape(noisy));
        CHECK(secs >= 0.0);
    });
    CHECK(seen == std::vector<int>{1, 2, 3});
}

TEST_CASE("every patch group lands in exactly one cluster") {
    const GmmPrior prior = small_prior(3, 41);
    const Image img = test::add_awgn(test::textured_image(24, 24, 42), 15.0, 43);
    Image unit(img.height(), img.width());
    for (std::size_t i = 0; i < img.pixels().size(); ++i)
        unit.pixels()[i] = img.pixels()[i] / 255.0;
    const auto groups = extract_patch_groups(unit, small_cfg());
    std::vector<int> counts(prior.components.size(), 0);
    for (const auto& g : groups) {
        const int k = map_assign(g, prior);
        REQUIRE(k >= 0);
        REQUIRE(k < static_cast<int>(prior.components.size()));
        ++counts[k];
    }
    int total = 0;
    for (int c : counts) total += c;
    CHECK(total == static_cast<int>(groups.size()));
}

TEST_CASE("denoise rejects a prior whose patch size disagrees") {
    const GmmPrior prior = small_prior(2, 44); // p = 3
    DenoiseConfig cfg = small_cfg();
    cfg.patch_size = 4;
    cfg.external_atoms = 13;
    const Image img = test::textured_image(20, 20, 45);
    CHECK_THROWS_AS(denoise(img, prior, cfg), DimensionError);
}
