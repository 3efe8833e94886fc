#pragma once

#include "epgd/config.hpp"
#include "epgd/image.hpp"

#include <Eigen/Dense>

#include <vector>

namespace epgd {

/// Top-left position of a patch on the pixel grid.
struct Coord {
    int row = 0;
    int col = 0;
    friend bool operator==(const Coord&, const Coord&) = default;
};

/// M similar patches around a reference patch, vectorized and group-mean
/// subtracted. A patch vector has length 3p^2 and is channel-planar: the
/// R plane in row-major patch order, then G, then B.
struct PatchGroup {
    Eigen::MatrixXd members;   ///< 3p^2 x M, mean already subtracted
    Eigen::VectorXd mean;      ///< group mean before subtraction
    std::vector<Coord> coords; ///< top-left position of each member
    int reference_index = 0;   ///< where the seed patch landed after sorting
};

/// Copies the p x p patch at (row, col) into a channel-planar vector.
Eigen::VectorXd extract_patch(const Image& img, int row, int col, int p);

/// Adds patch values at (row, col) into an accumulator canvas (see aggregate).
void splat_patch(const Eigen::VectorXd& patch, int row, int col, int p,
                 Image& sum, Image& hits);

/// Extracts one PatchGroup per reference position. Reference positions step
/// by cfg.stride in each dimension, with the final row/column forced so
/// every pixel is covered. For each reference the cfg.group_size most
/// similar patches inside the cfg.window x cfg.window search window
/// (clipped to the image) are kept, sorted by squared distance with
/// (row, col) tie-breaking; the seed patch is always among the members.
/// Throws DimensionError if the image is smaller than the patch.
std::vector<PatchGroup> extract_patch_groups(const Image& img, const DenoiseConfig& cfg);

/// Averages reconstructed patches back onto an h x w canvas. Members are
/// taken as absolute pixel values (group means already added back).
/// Accumulation runs in group order then member order; every pixel must be
/// covered by at least one patch or CoverageError is thrown.
Image aggregate(const std::vector<PatchGroup>& groups, int height, int width);

} // namespace epgd
