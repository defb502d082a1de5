#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "lbpforest/errors.hpp"
#include "lbpforest/image.hpp"

namespace lbpf {

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bad_input("cannot open file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

struct MemorySource {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

inline void png_memory_read(png_structp png, png_bytep out, png_size_t n) {
    auto* src = static_cast<MemorySource*>(png_get_io_ptr(png));
    if (src->pos + n > src->size) png_error(png, "truncated PNG stream");
    std::memcpy(out, src->data + src->pos, n);
    src->pos += n;
}

inline Image decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw bad_input("libpng init failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw bad_input("libpng init failed");

    MemorySource src{bytes.data(), bytes.size(), 0};
    Image img;
    std::vector<png_bytep> row_ptrs;
    std::vector<std::uint8_t> interleaved;

    if (setjmp(png_jmpbuf(r.png))) {
        throw bad_input("undecodable PNG: " + name);
    }
    png_set_read_fn(r.png, &src, png_memory_read);
    png_read_info(r.png, r.info);

    const png_uint_32 w = png_get_image_width(r.png, r.info);
    const png_uint_32 h = png_get_image_height(r.png, r.info);
    const int color_type = png_get_color_type(r.png, r.info);
    const int bit_depth = png_get_bit_depth(r.png, r.info);

    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        throw bad_input("grayscale PNG rejected (3-channel input required): " + name);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (bit_depth == 16) png_set_strip_16(r.png);
    if (png_get_valid(r.png, r.info, PNG_INFO_tRNS))
        throw bad_input("PNG with alpha rejected (3-channel input required): " + name);
    if (color_type == PNG_COLOR_TYPE_RGB_ALPHA)
        throw bad_input("PNG with alpha rejected (3-channel input required): " + name);

    png_set_interlace_handling(r.png);
    png_read_update_info(r.png, r.info);
    if (png_get_channels(r.png, r.info) != 3)
        throw bad_input("non-3-channel PNG rejected: " + name);

    img = Image(int(w), int(h), ColorSpace::rgb);
    const std::size_t stride = std::size_t(w) * 3;
    interleaved.assign(stride * h, 0);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = interleaved.data() + y * stride;
    png_read_image(r.png, row_ptrs.data());
    png_read_end(r.png, nullptr);

    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        img.planes[0][i] = interleaved[i * 3 + 0];
        img.planes[1][i] = interleaved[i * 3 + 1];
        img.planes[2][i] = interleaved[i * 3 + 2];
    }
    return img;
}

inline std::uint32_t le32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
           std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
inline std::uint16_t le16(const std::uint8_t* p) {
    return std::uint16_t(p[0] | p[1] << 8);
}

/// Uncompressed 24bpp BI_RGB only; bottom-up or top-down.
inline Image decode_bmp(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    if (bytes.size() < 54) throw bad_input("truncated BMP: " + name);
    const std::uint32_t data_offset = le32(&bytes[10]);
    const std::uint32_t header_size = le32(&bytes[14]);
    if (header_size < 40) throw bad_input("unsupported BMP header: " + name);
    const std::int32_t w = std::int32_t(le32(&bytes[18]));
    const std::int32_t h_raw = std::int32_t(le32(&bytes[22]));
    const std::uint16_t planes = le16(&bytes[26]);
    const std::uint16_t bpp = le16(&bytes[28]);
    const std::uint32_t compression = le32(&bytes[30]);
    if (planes != 1 || compression != 0) throw bad_input("unsupported BMP variant: " + name);
    if (bpp != 24) throw bad_input("non-3-channel BMP rejected (24bpp required): " + name);
    const bool top_down = h_raw < 0;
    const std::int32_t h = top_down ? -h_raw : h_raw;
    if (w <= 0 || h <= 0) throw bad_input("undecodable BMP: " + name);

    const std::size_t row_stride = (std::size_t(w) * 3 + 3) & ~std::size_t(3);
    if (bytes.size() < data_offset + row_stride * std::size_t(h))
        throw bad_input("truncated BMP: " + name);

    Image img(w, h, ColorSpace::rgb);
    for (std::int32_t y = 0; y < h; ++y) {
        const std::int32_t src_y = top_down ? y : h - 1 - y;
        const std::uint8_t* row = bytes.data() + data_offset + row_stride * std::size_t(src_y);
        for (std::int32_t x = 0; x < w; ++x) {
            img.set(0, x, y, row[x * 3 + 2]); // BGR order on disk
            img.set(1, x, y, row[x * 3 + 1]);
            img.set(2, x, y, row[x * 3 + 0]);
        }
    }
    return img;
}

/// Binary PPM (P6), maxval 255.
inline Image decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    std::size_t pos = 2; // past "P6"
    auto skip_space = [&] {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                return;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            throw bad_input("undecodable PPM header: " + name);
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            ++pos;
        }
        return v;
    };
    const long w = read_int();
    const long h = read_int();
    const long maxval = read_int();
    if (w <= 0 || h <= 0) throw bad_input("undecodable PPM: " + name);
    if (maxval != 255) throw bad_input("unsupported PPM maxval (255 required): " + name);
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw bad_input("undecodable PPM header: " + name);
    ++pos; // single whitespace byte before pixel data
    const std::size_t need = std::size_t(w) * std::size_t(h) * 3;
    if (bytes.size() - pos < need) throw bad_input("truncated PPM: " + name);

    Image img(int(w), int(h), ColorSpace::rgb);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        img.planes[0][i] = bytes[pos + i * 3 + 0];
        img.planes[1][i] = bytes[pos + i * 3 + 1];
        img.planes[2][i] = bytes[pos + i * 3 + 2];
    }
    return img;
}

} // namespace detail

/// Loads a PNG, BMP, or binary PPM (P6) file as an RGB image at its
/// original size. The format is sniffed from magic bytes, not the
/// extension. Grayscale and alpha-carrying sources are rejected.
inline Image load_image(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    const std::string name = path.string();
    static const std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0)
        return detail::decode_png(bytes, name);
    if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M')
        return detail::decode_bmp(bytes, name);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6')
        return detail::decode_ppm(bytes, name);
    throw bad_input("unrecognized image format: " + name);
}

/// Writes an 8-bit RGB PNG. Output bytes are deterministic for a given
/// image and libpng/zlib build.
inline void save_png(const Image& img, const std::filesystem::path& path) {
    if (img.space != ColorSpace::rgb) throw bad_input("save_png: RGB image required");
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw bad_input("cannot open for writing: " + path.string());

    detail::PngWriter w;
    std::vector<std::uint8_t> interleaved(img.pixel_count() * 3);
    std::vector<png_bytep> row_ptrs(std::size_t(img.height));
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        interleaved[i * 3 + 0] = img.planes[0][i];
        interleaved[i * 3 + 1] = img.planes[1][i];
        interleaved[i * 3 + 2] = img.planes[2][i];
    }
    for (int y = 0; y < img.height; ++y)
        row_ptrs[std::size_t(y)] = interleaved.data() + std::size_t(y) * img.width * 3;

    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) {
        std::fclose(fp);
        throw bad_input("libpng init failed");
    }
    w.info = png_create_info_struct(w.png);
    if (!w.info) {
        std::fclose(fp);
        throw bad_input("libpng init failed");
    }
    if (setjmp(png_jmpbuf(w.png))) {
        std::fclose(fp);
        throw bad_input("PNG write failed: " + path.string());
    }
    png_init_io(w.png, fp);
    png_set_IHDR(w.png, w.info, png_uint_32(img.width), png_uint_32(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    png_write_image(w.png, row_ptrs.data());
    png_write_end(w.png, nullptr);
    std::fclose(fp);
}

} // namespace lbpf
