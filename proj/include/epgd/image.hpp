#pragma once

#include <string>
#include <vector>

namespace epgd {

/// An H x W grid of 3-channel floating-point intensities. Decoded files
/// land in [0, 255]; intermediate pipeline estimates may drift slightly
/// outside and are only clamped when written back to disk.
class Image {
public:
    Image() = default;
    Image(int height, int width, double fill = 0.0)
        : height_(height), width_(width),
          data_(static_cast<std::size_t>(height) * width * 3, fill) {}

    int height() const { return height_; }
    int width() const { return width_; }

    double& at(int row, int col, int ch) {
        return data_[(static_cast<std::size_t>(row) * width_ + col) * 3 + ch];
    }
    double at(int row, int col, int ch) const {
        return data_[(static_cast<std::size_t>(row) * width_ + col) * 3 + ch];
    }

    /// Row-major interleaved RGB storage.
    std::vector<double>& pixels() { return data_; }
    const std::vector<double>& pixels() const { return data_; }

    bool same_shape(const Image& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Reads an 8-bit RGB PNG or binary PPM (P6, maxval 255). The format is
/// sniffed from the file's magic bytes. Unsupported bit depths, channel
/// layouts or damaged streams raise FormatError/TruncationError; missing
/// or unreadable files raise IoError.
Image load_image(const std::string& path);

/// Writes `img` as PNG or P6 PPM depending on the file extension
/// (.png / .ppm, case-insensitive). Values are clamped to [0, 255] and
/// rounded half-up to 8 bits.
void save_image(const Image& img, const std::string& path);

} // namespace epgd
