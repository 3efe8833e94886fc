#include "epgd/patch_group.hpp"

#include "epgd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace epgd {

namespace {

// Reference positions along one axis: 0, s, 2s, ... plus the forced final
// position so the last patch touches the image border.
std::vector<int> reference_positions(int extent, int p, int stride) {
    std::vector<int> pos;
    const int last = extent - p;
    for (int r = 0; r <= last; r += stride) pos.push_back(r);
    if (pos.back() != last) pos.push_back(last);
    return pos;
}

struct Candidate {
    double dist2;
    int row;
    int col;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
}

} // namespace

Eigen::VectorXd extract_patch(const Image& img, int row, int col, int p) {
    Eigen::VectorXd v(3 * p * p);
    int idx = 0;
    for (int ch = 0; ch < 3; ++ch)
        for (int dr = 0; dr < p; ++dr)
            for (int dc = 0; dc < p; ++dc) v[idx++] = img.at(row + dr, col + dc, ch);
    return v;
}

void splat_patch(const Eigen::VectorXd& patch, int row, int col, int p,
                 Image& sum, Image& hits) {
    int idx = 0;
    for (int ch = 0; ch < 3; ++ch)
        for (int dr = 0; dr < p; ++dr)
            for (int dc = 0; dc < p; ++dc) {
                sum.at(row + dr, col + dc, ch) += patch[idx++];
                hits.at(row + dr, col + dc, ch) += 1.0;
            }
}

std::vector<PatchGroup> extract_patch_groups(const Image& img, const DenoiseConfig& cfg) {
    // Only the extraction-related fields matter here; the full config
    // (atom counts etc.) is validated by the pipeline entry points.
    if (cfg.patch_size < 1) throw std::invalid_argument("config: patch size must be >= 1");
    if (cfg.group_size < 1) throw std::invalid_argument("config: group size must be >= 1");
    if (cfg.window < 1 || cfg.window % 2 == 0)
        throw std::invalid_argument("config: window must be odd and >= 1");
    if (cfg.stride < 1 || cfg.stride > cfg.patch_size)
        throw std::invalid_argument("config: stride must lie in [1, p]");
    const int p = cfg.patch_size;
    const int M = cfg.group_size;
    if (img.height() < p || img.width() < p)
        throw DimensionError("image " + std::to_string(img.height()) + "x" +
                             std::to_string(img.width()) + " is smaller than the " +
                             std::to_string(p) + "x" + std::to_string(p) + " patch");

    const std::vector<int> rows = reference_positions(img.height(), p, cfg.stride);
    const std::vector<int> cols = reference_positions(img.width(), p, cfg.stride);
    const int half = (cfg.window - 1) / 2;
    const int max_row = img.height() - p;
    const int max_col = img.width() - p;

    std::vector<PatchGroup> groups(rows.size() * cols.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long gi = 0; gi < static_cast<long>(groups.size()); ++gi) {
        const int rr = rows[gi / cols.size()];
        const int rc = cols[gi % cols.size()];
        const Eigen::VectorXd ref = extract_patch(img, rr, rc, p);

        const int r0 = std::max(0, rr - half), r1 = std::min(max_row, rr + half);
        const int c0 = std::max(0, rc - half), c1 = std::min(max_col, rc + half);

        std::vector<Candidate> cands;
        cands.reserve(static_cast<std::size_t>(r1 - r0 + 1) * (c1 - c0 + 1));
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) {
                double d2 = 0.0;
                int idx = 0;
                for (int ch = 0; ch < 3; ++ch)
                    for (int dr = 0; dr < p; ++dr)
                        for (int dc = 0; dc < p; ++dc) {
                            const double diff = img.at(r + dr, c + dc, ch) - ref[idx++];
                            d2 += diff * diff;
                        }
                cands.push_back({d2, r, c});
            }

        const int take = std::min<int>(M, static_cast<int>(cands.size()));
        std::partial_sort(cands.begin(), cands.begin() + take, cands.end(), candidate_less);

        std::vector<Candidate> chosen(cands.begin(), cands.begin() + take);
        const bool seed_in = std::any_of(chosen.begin(), chosen.end(), [&](const Candidate& c) {
            return c.row == rr && c.col == rc;
        });
        if (!seed_in) {
            // Only possible when >= M candidates tie with the seed at distance
            // zero; the group must still contain the patch being estimated.
            chosen.back() = {0.0, rr, rc};
            std::sort(chosen.begin(), chosen.end(), candidate_less);
        }
        while (static_cast<int>(chosen.size()) < M) // image too small for M distinct patches
            chosen.push_back(chosen[chosen.size() % take]);

        PatchGroup g;
        g.members.resize(3 * p * p, M);
        g.coords.resize(M);
        for (int m = 0; m < M; ++m) {
            g.coords[m] = {chosen[m].row, chosen[m].col};
            if (chosen[m].row == rr && chosen[m].col == rc) g.reference_index = m;
            g.members.col(m) = extract_patch(img, chosen[m].row, chosen[m].col, p);
        }
        g.mean = g.members.rowwise().mean();
        g.members.colwise() -= g.mean;
        groups[gi] = std::move(g);
    }
    return groups;
}

Image aggregate(const std::vector<PatchGroup>& groups, int height, int width) {
    Image sum(height, width, 0.0);
    Image hits(height, width, 0.0);
    for (const PatchGroup& g : groups) {
        const int p = static_cast<int>(std::lround(std::sqrt(g.members.rows() / 3.0)));
        if (3 * p * p != g.members.rows())
            throw DimensionError("patch vector length " + std::to_string(g.members.rows()) +
                                 " is not 3p^2");
        for (int m = 0; m < g.members.cols(); ++m) {
            const Coord& c = g.coords[m];
            if (c.row < 0 || c.col < 0 || c.row + p > height || c.col + p > width)
                throw DimensionError("patch at (" + std::to_string(c.row) + "," +
                                     std::to_string(c.col) + ") falls outside the canvas");
            splat_patch(g.members.col(m), c.row, c.col, p, sum, hits);
        }
    }
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            for (int ch = 0; ch < 3; ++ch) {
                const double n = hits.at(r, c, ch);
                if (n == 0.0)
                    throw CoverageError("pixel (" + std::to_string(r) + "," +
                                        std::to_string(c) + ") is covered by no patch");
                sum.at(r, c, ch) /= n;
            }
    return sum;
}

} // namespace epgd
