#pragma once

#include <stdexcept>
#include <string>

namespace epgd {

/// Base class for all errors thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
struct IoError : Error {
    using Error::Error;
};

/// Input bytes do not form a supported file (bad magic, version,
/// bit depth, channel count, non-finite stored values, ...).
struct FormatError : Error {
    using Error::Error;
};

/// File ended before all declared payload bytes were read.
struct TruncationError : Error {
    using Error::Error;
};

/// Shapes or sizes of inputs do not match what an operation requires.
struct DimensionError : Error {
    using Error::Error;
};

/// A pixel of the output canvas is not covered by any patch.
struct CoverageError : Error {
    using Error::Error;
};

/// Model training cannot proceed (degenerate clusters, empty corpus, ...).
struct TrainingError : Error {
    using Error::Error;
};

/// In-memory data violates a structural guarantee (e.g. a covariance
/// matrix that is not symmetric within tolerance).
struct CorruptionError : Error {
    using Error::Error;
};

/// A numerical routine failed to reach its required accuracy.
struct NumericalError : Error {
    using Error::Error;
};

} // namespace epgd
