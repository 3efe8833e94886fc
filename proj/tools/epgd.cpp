#include "epgd/denoiser.hpp"
#include "epgd/errors.hpp"
#include "epgd/metrics.hpp"
#include "epgd/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace epgd;

namespace {

// Pixel intensities are modeled on [0,1] inside the pipeline; the
// covariance regularizer is specified on the [0,255] scale.
constexpr double kUnit = 1.0 / 255.0;
constexpr double kCovRegPixel = 1e-3;
constexpr double kEigenFloor = 1e-6;

std::vector<fs::path> list_images(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

Image to_unit_scale(const Image& img) {
    Image out(img.height(), img.width());
    for (std::size_t i = 0; i < img.pixels().size(); ++i)
        out.pixels()[i] = img.pixels()[i] * kUnit;
    return out;
}

int run_train(const std::string& images_dir, const std::string& out_path, int k, int patch,
              int group, int window, std::uint64_t seed, std::uint64_t max_groups) {
    DenoiseConfig cfg;
    cfg.patch_size = patch;
    cfg.group_size = group;
    cfg.window = window;
    cfg.mixture_size = k;
    cfg.seed = seed;
    cfg.external_atoms = 0; // not used when training
    cfg.validate();

    std::printf("training prior: p=%d M=%d W=%d K=%d stride=%d seed=%" PRIu64 "\n",
                cfg.patch_size, cfg.group_size, cfg.window, cfg.mixture_size, cfg.stride,
                seed);

    const std::vector<fs::path> files = list_images(images_dir);
    if (files.empty()) throw IoError(images_dir + ": no .png or .ppm images found");

    std::vector<PatchGroup> groups;
    for (const auto& f : files) {
        const Image img = to_unit_scale(load_image(f.string()));
        std::vector<PatchGroup> g = extract_patch_groups(img, cfg);
        std::printf("  %s: %dx%d, %zu patch groups\n", f.filename().string().c_str(),
                    img.height(), img.width(), g.size());
        std::move(g.begin(), g.end(), std::back_inserter(groups));
    }

    if (max_groups > 0 && groups.size() > max_groups) {
        // Seeded partial Fisher-Yates keeps the subsample reproducible.
        Rng rng(mix_seed(seed, 0x5a3f));
        for (std::uint64_t i = 0; i < max_groups; ++i) {
            const std::uint64_t j = i + rng.below(groups.size() - i);
            std::swap(groups[i], groups[j]);
        }
        groups.resize(max_groups);
    }
    std::printf("  total: %zu patch groups\n", groups.size());

    double energy = 0.0;
    for (const auto& g : groups) energy += g.members.squaredNorm();
    if (energy <= 1e-12)
        throw TrainingError("degenerate corpus: every patch group is zero after mean "
                            "subtraction (constant images?)");

    EmOptions opts;
    opts.seed = seed;
    opts.cov_reg = kCovRegPixel * kUnit * kUnit;
    opts.eigen_floor = kEigenFloor;
    TrainStats stats;
    GmmPrior prior = train_gmm(groups, k, opts, &stats);
    eigendecompose(prior, opts.eigen_floor);
    save_prior(prior, out_path);

    std::printf("EM finished after %d iterations, final log-likelihood %.6e\n",
                stats.iterations, stats.log_likelihood.back());
    std::printf("component weights:");
    for (const auto& c : prior.components) std::printf(" %.4f", c.weight);
    std::printf("\nwrote %s\n", out_path.c_str());
    return 0;
}

int run_denoise(const std::string& in_path, const std::string& prior_path,
                const std::string& out_path, double lambda, int r, int t, int iters,
                int stride, std::uint64_t seed, const std::optional<std::string>& ref_path) {
    const Image noisy = load_image(in_path);
    const GmmPrior prior = load_prior(prior_path);

    DenoiseConfig cfg;
    cfg.patch_size = prior.patch_size;
    cfg.mixture_size = static_cast<int>(prior.components.size());
    cfg.lambda = lambda;
    cfg.external_atoms = r;
    cfg.dict_iters = t;
    cfg.ite_num = iters;
    cfg.stride = stride;
    cfg.seed = seed;

    std::optional<Image> ref;
    if (ref_path) ref = load_image(*ref_path);

    const auto report = [&](int ite, const Image& estimate, double secs) {
        if (ref) {
            std::printf("iteration %d: %.2f s  PSNR: %.4f dB  SSIM: %.4f\n", ite, secs,
                        psnr(estimate, *ref), ssim(estimate, *ref));
        } else {
            std::printf("iteration %d: %.2f s\n", ite, secs);
        }
        std::fflush(stdout);
    };

    const Image out = denoise(noisy, prior, cfg, report);
    save_image(out, out_path);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

int run_eval(const std::string& a_path, const std::string& b_path) {
    const Image a = load_image(a_path);
    const Image b = load_image(b_path);
    std::printf("PSNR: %.4f dB  SSIM: %.4f\n", psnr(a, b), ssim(a, b));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    std::setvbuf(stdout, nullptr, _IOLBF, 0);
#ifdef _OPENMP
    if (const char* env = std::getenv("EPGD_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) omp_set_num_threads(std::min(cap, omp_get_max_threads()));
    }
#endif

    CLI::App app{"patch-group image denoising with an external-prior-guided dictionary"};
    app.require_subcommand(1);

    // train-prior
    std::string images_dir, prior_out;
    int k = 32, patch = 6, group = 10, window = 31;
    std::uint64_t seed = 0, max_groups = 0;
    auto* train = app.add_subcommand("train-prior", "learn a patch-group prior from clean images");
    train->add_option("--images", images_dir, "directory of clean .png/.ppm images")->required();
    train->add_option("--out", prior_out, "output prior file")->required();
    train->add_option("--k", k, "number of mixture components");
    train->add_option("--patch", patch, "patch side length");
    train->add_option("--group", group, "patches per group");
    train->add_option("--window", window, "search window side (odd)");
    train->add_option("--seed", seed, "random seed");
    train->add_option("--max-groups", max_groups, "cap on extracted groups (0 = no cap)");

    // denoise
    std::string in_path, prior_path, out_path;
    double lambda = 0.001;
    int r = 54, t = 2, iters = 4, stride = 3;
    std::uint64_t dseed = 0;
    std::string ref_path;
    auto* dn = app.add_subcommand("denoise", "denoise an image with a trained prior");
    dn->add_option("--in", in_path, "noisy input image")->required();
    dn->add_option("--prior", prior_path, "trained prior file")->required();
    dn->add_option("--out", out_path, "output image")->required();
    dn->add_option("--lambda", lambda, "sparse regularization weight");
    dn->add_option("--r", r, "external atoms kept from the prior");
    dn->add_option("--t", t, "dictionary-learning iterations");
    dn->add_option("--iters", iters, "outer denoising iterations");
    dn->add_option("--stride", stride, "reference-patch stride");
    dn->add_option("--seed", dseed, "random seed");
    dn->add_option("--ref", ref_path, "clean reference; prints PSNR/SSIM per iteration");

    // eval
    std::string a_path, b_path;
    auto* ev = app.add_subcommand("eval", "print PSNR and SSIM between two images");
    ev->add_option("--a", a_path, "first image")->required();
    ev->add_option("--b", b_path, "second image")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed())
            return run_train(images_dir, prior_out, k, patch, group, window, seed, max_groups);
        if (dn->parsed())
            return run_denoise(in_path, prior_path, out_path, lambda, r, t, iters, stride,
                               dseed,
                               ref_path.empty() ? std::nullopt
                                                : std::optional<std::string>(ref_path));
        if (ev->parsed()) return run_eval(a_path, b_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
