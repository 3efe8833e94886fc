#include "epgd/image.hpp"

#include "epgd/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace epgd {

namespace {

std::uint8_t quantize(double v) {
    v = std::clamp(v, 0.0, 255.0);
    return static_cast<std::uint8_t>(std::floor(v + 0.5)); // half-up
}

std::string lower_ext(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors through longjmp; the handler stashes the message
// so we can rethrow it as a library exception once the C frames unwound.
void png_error_to_string(png_structp png, png_const_charp msg) {
    auto* out = static_cast<std::string*>(png_get_error_ptr(png));
    if (out) *out = msg ? msg : "unknown libpng error";
    png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

// State mutated between setjmp and a potential longjmp lives on the heap
// behind a pointer that is never reassigned, so nothing is clobbered.
struct PngReadCtx {
    Image img;
    std::vector<std::uint8_t> row;
    std::vector<std::vector<std::uint8_t>> rows;
    std::string err;
};

Image load_png(const std::string& path, std::FILE* fp) {
    auto ctx = std::make_unique<PngReadCtx>();
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &ctx->err,
                                             png_error_to_string, png_warning_ignore);
    if (!png) throw Error("libpng: failed to allocate read struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("libpng: failed to allocate info struct");
    }
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};

    if (setjmp(png_jmpbuf(png)) != 0)
        throw FormatError(path + ": corrupt PNG stream (" + ctx->err + ")");

    png_init_io(png, fp);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (depth != 8)
        throw FormatError(path + ": unsupported PNG bit depth " + std::to_string(depth) +
                          " (need 8)");
    if (color != PNG_COLOR_TYPE_RGB)
        throw FormatError(path + ": unsupported PNG channel count (color type " +
                          std::to_string(color) + ", need 8-bit RGB)");

    const int passes = png_set_interlace_handling(png);
    png_read_update_info(png, info);
    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3)
        throw FormatError(path + ": unexpected PNG row size");

    ctx->img = Image(static_cast<int>(h), static_cast<int>(w));
    ctx->row.resize(static_cast<std::size_t>(w) * 3);
    if (passes > 1) ctx->rows.assign(h, ctx->row); // interlaced: keep whole frame

    for (int pass = 0; pass < passes; ++pass) {
        for (png_uint_32 y = 0; y < h; ++y) {
            std::uint8_t* dst = passes > 1 ? ctx->rows[y].data() : ctx->row.data();
            png_read_row(png, dst, nullptr);
            if (passes == 1)
                for (png_uint_32 x = 0; x < w * 3; ++x)
                    ctx->img.pixels()[static_cast<std::size_t>(y) * w * 3 + x] = ctx->row[x];
        }
    }
    if (passes > 1) {
        for (png_uint_32 y = 0; y < h; ++y)
            for (png_uint_32 x = 0; x < w * 3; ++x)
                ctx->img.pixels()[static_cast<std::size_t>(y) * w * 3 + x] = ctx->rows[y][x];
    }
    png_read_end(png, nullptr);
    return std::move(ctx->img);
}

struct PngWriteCtx {
    std::vector<std::uint8_t> row;
    std::string err;
};

void save_png(const Image& img, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError(path + ": cannot open for writing");

    auto ctx = std::make_unique<PngWriteCtx>();
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &ctx->err,
                                              png_error_to_string, png_warning_ignore);
    if (!png) throw Error("libpng: failed to allocate write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("libpng: failed to allocate info struct");
    }
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};

    const int w = img.width(), h = img.height();
    ctx->row.resize(static_cast<std::size_t>(w) * 3);

    if (setjmp(png_jmpbuf(png)) != 0)
        throw IoError(path + ": PNG write failed (" + ctx->err + ")");

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y) {
        const double* src = img.pixels().data() + static_cast<std::size_t>(y) * w * 3;
        for (int x = 0; x < w * 3; ++x) ctx->row[x] = quantize(src[x]);
        png_write_row(png, ctx->row.data());
    }
    png_write_end(png, info);
}

// PPM header token reader: skips whitespace and '#' comments.
std::string next_pnm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#')
                tok.push_back(static_cast<char>(in.get()));
            return tok;
        }
    }
    return tok;
}

long parse_pnm_int(const std::string& tok, const std::string& path, const char* what) {
    if (tok.empty()) throw TruncationError(path + ": PPM header ended early");
    for (char c : tok)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw FormatError(path + ": bad PPM " + what + " '" + tok + "'");
    return std::stol(tok);
}

Image load_ppm(const std::string& path, std::ifstream& in) {
    const std::string magic = next_pnm_token(in);
    if (magic != "P6")
        throw FormatError(path + ": unsupported PNM magic '" + magic + "' (need binary P6)");
    const long w = parse_pnm_int(next_pnm_token(in), path, "width");
    const long h = parse_pnm_int(next_pnm_token(in), path, "height");
    const long maxval = parse_pnm_int(next_pnm_token(in), path, "maxval");
    if (w <= 0 || h <= 0) throw FormatError(path + ": non-positive PPM dimensions");
    if (maxval != 255)
        throw FormatError(path + ": unsupported PPM maxval " + std::to_string(maxval) +
                          " (need 8-bit, maxval 255)");
    in.get(); // single whitespace byte separating header and raster

    const std::size_t n = static_cast<std::size_t>(w) * h * 3;
    std::vector<std::uint8_t> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw TruncationError(path + ": PPM raster truncated (" + std::to_string(in.gcount()) +
                              " of " + std::to_string(n) + " bytes)");

    Image img(static_cast<int>(h), static_cast<int>(w));
    for (std::size_t i = 0; i < n; ++i) img.pixels()[i] = bytes[i];
    return img;
}

void save_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
    std::vector<std::uint8_t> bytes(img.pixels().size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize(img.pixels()[i]);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(path + ": write failed");
}

} // namespace

Image load_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError(path + ": cannot open file");
    unsigned char sig[8] = {0};
    probe.read(reinterpret_cast<char*>(sig), 8);
    const std::streamsize got = probe.gcount();

    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (got >= 8 && std::memcmp(sig, png_sig, 8) == 0) {
        probe.close();
        FilePtr fp(std::fopen(path.c_str(), "rb"));
        if (!fp) throw IoError(path + ": cannot open file");
        return load_png(path, fp.get());
    }
    if (got >= 2 && sig[0] == 'P') {
        probe.seekg(0);
        return load_ppm(path, probe);
    }
    throw FormatError(path + ": not a PNG or binary PPM file");
}

void save_image(const Image& img, const std::string& path) {
    if (img.width() <= 0 || img.height() <= 0)
        throw DimensionError(path + ": refusing to write an empty image");
    const std::string ext = lower_ext(path);
    if (ext == ".png")
        save_png(img, path);
    else if (ext == ".ppm")
        save_ppm(img, path);
    else
        throw FormatError(path + ": unsupported output extension '" + ext +
                          "' (use .png or .ppm)");
}

} // namespace epgd
