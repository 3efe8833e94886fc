#pragma once

// Test-only helpers: synthetic images, noise injection and random
// linear-algebra objects. Everything is driven by epgd::Rng so the suite
// is reproducible down to the bit.

#include "epgd/image.hpp"
#include "epgd/patch_group.hpp"
#include "epgd/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace epgd::test {

/// Piecewise-smooth color image with oriented gratings, soft blobs and a
/// couple of hard rectangle edges; loosely mimics natural-image structure
/// so a trained prior has subspaces worth learning.
inline Image textured_image(int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    Image img(h, w);

    const double base[3] = {rng.uniform(60, 190), rng.uniform(60, 190), rng.uniform(60, 190)};
    struct Grating {
        double fx, fy, phase, amp, mix[3];
    };
    std::vector<Grating> gratings;
    for (int i = 0; i < 6; ++i) {
        Grating g;
        const double freq = rng.uniform(0.03, 0.55);
        const double angle = rng.uniform(0.0, 6.2831853);
        g.fx = freq * std::cos(angle);
        g.fy = freq * std::sin(angle);
        g.phase = rng.uniform(0.0, 6.2831853);
        g.amp = rng.uniform(4.0, 26.0);
        for (double& m : g.mix) m = rng.uniform(0.3, 1.0);
        gratings.push_back(g);
    }
    struct Blob {
        double cy, cx, radius, amp, mix[3];
    };
    std::vector<Blob> blobs;
    for (int i = 0; i < 5; ++i) {
        Blob b;
        b.cy = rng.uniform(0, h);
        b.cx = rng.uniform(0, w);
        b.radius = rng.uniform(0.08, 0.3) * std::min(h, w);
        b.amp = rng.uniform(-45.0, 45.0);
        for (double& m : b.mix) m = rng.uniform(0.2, 1.0);
        blobs.push_back(b);
    }
    struct Rect {
        int r0, c0, r1, c1;
        double amp, mix[3];
    };
    std::vector<Rect> rects;
    for (int i = 0; i < 4; ++i) {
        Rect rc;
        rc.r0 = static_cast<int>(rng.below(h));
        rc.c0 = static_cast<int>(rng.below(w));
        rc.r1 = std::min<int>(h, rc.r0 + 4 + static_cast<int>(rng.below(h / 2 + 1)));
        rc.c1 = std::min<int>(w, rc.c0 + 4 + static_cast<int>(rng.below(w / 2 + 1)));
        rc.amp = rng.uniform(-35.0, 35.0);
        for (double& m : rc.mix) m = rng.uniform(0.2, 1.0);
        rects.push_back(rc);
    }
    const double gy = rng.uniform(-30.0, 30.0), gx = rng.uniform(-30.0, 30.0);

    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double v[3];
            for (int ch = 0; ch < 3; ++ch)
                v[ch] = base[ch] + gy * r / std::max(1, h - 1) + gx * c / std::max(1, w - 1);
            for (const auto& g : gratings) {
                const double s = g.amp * std::sin(g.fx * c + g.fy * r + g.phase);
                for (int ch = 0; ch < 3; ++ch) v[ch] += g.mix[ch] * s;
            }
            for (const auto& b : blobs) {
                const double d2 = (r - b.cy) * (r - b.cy) + (c - b.cx) * (c - b.cx);
                const double s = b.amp * std::exp(-d2 / (2.0 * b.radius * b.radius));
                for (int ch = 0; ch < 3; ++ch) v[ch] += b.mix[ch] * s;
            }
            for (const auto& rc : rects)
                if (r >= rc.r0 && r < rc.r1 && c >= rc.c0 && c < rc.c1)
                    for (int ch = 0; ch < 3; ++ch) v[ch] += rc.mix[ch] * rc.amp;
            for (int ch = 0; ch < 3; ++ch)
                img.at(r, c, ch) = std::clamp(v[ch] + rng.uniform(-0.5, 0.5), 0.0, 255.0);
        }
    return img;
}

/// Uniform random pixels in [0, 255]; structure-free.
inline Image random_image(int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    Image img(h, w);
    for (double& v : img.pixels()) v = rng.uniform(0.0, 255.0);
    return img;
}

/// Adds white Gaussian noise of the given sigma to every channel (no clamp).
inline Image add_awgn(const Image& img, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    Image out = img;
    for (double& v : out.pixels()) v += sigma * rng.normal();
    return out;
}

/// Random orthogonal matrix: QR of a Gaussian matrix with the sign fixed so
/// R's diagonal is positive (makes the draw deterministic and unbiased).
inline Eigen::MatrixXd random_orthogonal(int d, Rng& rng) {
    Eigen::MatrixXd G(d, d);
    for (int c = 0; c < d; ++c)
        for (int r = 0; r < d; ++r) G(r, c) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < d; ++c)
        if (R(c, c) < 0) Q.col(c) = -Q.col(c);
    return Q;
}

/// Orthonormal basis of the complement of `guard`, n columns, via seeded
/// Gram-Schmidt on Gaussian draws.
inline Eigen::MatrixXd random_complement_basis(const Eigen::MatrixXd& guard, int n, Rng& rng) {
    const int d = static_cast<int>(guard.rows());
    Eigen::MatrixXd B(d, n);
    for (int c = 0; c < n; ++c) {
        Eigen::VectorXd v(d);
        double norm = 0.0;
        do {
            for (int i = 0; i < d; ++i) v[i] = rng.normal();
            if (guard.cols() > 0) v -= guard * (guard.transpose() * v);
            for (int j = 0; j < c; ++j) v -= B.col(j) * B.col(j).dot(v);
            norm = v.norm();
        } while (norm < 1e-8);
        B.col(c) = v / norm;
    }
    return B;
}

/// Zero-mean Gaussian samples with covariance U diag(s) U^T, one per column.
inline Eigen::MatrixXd sample_gaussian(const Eigen::MatrixXd& U, const Eigen::VectorXd& s,
                                       int n, Rng& rng) {
    const int d = static_cast<int>(U.rows());
    Eigen::MatrixXd Z(d, n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < d; ++r) Z(r, c) = rng.normal();
    return U * s.cwiseSqrt().asDiagonal() * Z;
}

/// Wraps raw columns as a PatchGroup (zero mean vector, dummy coords) so
/// GMM routines can consume synthetic draws directly.
inline PatchGroup group_from_columns(const Eigen::MatrixXd& members) {
    PatchGroup g;
    g.members = members;
    g.mean = Eigen::VectorXd::Zero(members.rows());
    g.coords.assign(static_cast<std::size_t>(members.cols()), Coord{0, 0});
    g.reference_index = 0;
    return g;
}

/// Convex scalar objective (z - a)^2 + 2 t |a| minimized by ternary search;
/// the kink at zero is checked explicitly. Independent of the closed form.
inline double scalar_shrink_oracle(double z, double t) {
    double lo = -std::abs(z) - 2.0 * t - 1.0, hi = std::abs(z) + 2.0 * t + 1.0;
    auto f = [&](double a) { return (z - a) * (z - a) + 2.0 * t * std::abs(a); };
    for (int i = 0; i < 200; ++i) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (f(m1) < f(m2))
            hi = m2;
        else
            lo = m1;
    }
    const double mid = 0.5 * (lo + hi);
    return f(0.0) < f(mid) ? 0.0 : mid;
}

} // namespace epgd::test
