#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lbpforest/errors.hpp"

namespace lbpf {

enum class ColorSpace : std::uint8_t { rgb = 0, hsv = 1, ycbcr = 2 };

inline const char* to_string(ColorSpace s) {
    switch (s) {
        case ColorSpace::rgb: return "rgb";
        case ColorSpace::hsv: return "hsv";
        case ColorSpace::ycbcr: return "ycbcr";
    }
    return "rgb";
}

inline ColorSpace color_space_from_string(const std::string& s) {
    if (s == "rgb" || s == "RGB") return ColorSpace::rgb;
    if (s == "hsv" || s == "HSV") return ColorSpace::hsv;
    if (s == "ycbcr" || s == "YCbCr" || s == "YCBCR") return ColorSpace::ycbcr;
    throw bad_input("unknown color space: " + s);
}

/// Three-plane 8-bit raster. Planes are stored separately because every
/// feature operation downstream consumes one channel at a time.
struct Image {
    int width = 0;
    int height = 0;
    ColorSpace space = ColorSpace::rgb;
    std::array<std::vector<std::uint8_t>, 3> planes; // planes[c][y*width + x]

    Image() = default;
    Image(int w, int h, ColorSpace s) : width(w), height(h), space(s) {
        for (auto& p : planes) p.assign(std::size_t(w) * h, 0);
    }

    std::uint8_t at(int c, int x, int y) const {
        return planes[std::size_t(c)][std::size_t(y) * width + x];
    }
    void set(int c, int x, int y, std::uint8_t v) {
        planes[std::size_t(c)][std::size_t(y) * width + x] = v;
    }
    std::size_t pixel_count() const { return std::size_t(width) * height; }

    bool operator==(const Image&) const = default;
};

namespace detail {

inline std::uint8_t round_clamp_u8(double v) {
    const long r = std::lround(v);
    if (r < 0) return 0;
    if (r > 255) return 255;
    return static_cast<std::uint8_t>(r);
}

// Round-half-away-from-zero of the nonnegative rational num/den, exactly.
inline std::uint8_t round_u8_ratio(std::int64_t num, std::int64_t den) {
    const std::int64_t r = (2 * num + den) / (2 * den);
    return r > 255 ? std::uint8_t{255} : static_cast<std::uint8_t>(r);
}

// H is rescaled from degrees to [0,255] (255 == 360 degrees), so all three
// channels share one intensity domain. Achromatic pixels get H = 0. Hue
// branch priority on max ties: red, then green, then blue. All arithmetic
// is exact integer rational math, so results are platform-identical and
// half-way cases round deterministically (away from zero).
inline void rgb_to_hsv_u8(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8,
                          std::uint8_t& h8, std::uint8_t& s8, std::uint8_t& v8) {
    const std::int64_t r = r8, g = g8, b = b8;
    const std::int64_t mx = std::max(r, std::max(g, b));
    const std::int64_t mn = std::min(r, std::min(g, b));
    const std::int64_t delta = mx - mn;
    v8 = static_cast<std::uint8_t>(mx);
    s8 = mx > 0 ? round_u8_ratio(255 * delta, mx) : std::uint8_t{0};
    if (delta == 0) {
        h8 = 0;
        return;
    }
    std::int64_t num; // hue in degrees, times delta; in [0, 360*delta)
    if (mx == r) {
        num = 60 * (g - b);
        if (num < 0) num += 360 * delta;
    } else if (mx == g) {
        num = 60 * (b - r) + 120 * delta;
    } else {
        num = 60 * (r - g) + 240 * delta;
    }
    h8 = round_u8_ratio(255 * num, 360 * delta);
}

// BT.601 full-range, exact integer rational arithmetic (the chroma
// coefficients scaled by 1e6 are the standard's exact values).
inline void rgb_to_ycbcr_u8(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8,
                            std::uint8_t& y8, std::uint8_t& cb8, std::uint8_t& cr8) {
    const std::int64_t r = r8, g = g8, b = b8;
    y8 = round_u8_ratio(299 * r + 587 * g + 114 * b, 1000);
    cb8 = round_u8_ratio(128'000'000 - 168736 * r - 331264 * g + 500000 * b, 1'000'000);
    cr8 = round_u8_ratio(128'000'000 + 500000 * r - 418688 * g - 81312 * b, 1'000'000);
}

} // namespace detail

/// Per-channel bilinear resampling with corner-aligned sample mapping.
/// An identity resize copies bits; constant images stay constant.
inline Image resize_bilinear(const Image& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw bad_input("resize_bilinear: zero-size target");
    if (out_w == img.width && out_h == img.height) return img;

    Image out(out_w, out_h, img.space);
    const double sx = out_w > 1 ? double(img.width - 1) / (out_w - 1) : 0.0;
    const double sy = out_h > 1 ? double(img.height - 1) / (out_h - 1) : 0.0;
    for (int c = 0; c < 3; ++c) {
        const auto& src = img.planes[std::size_t(c)];
        auto& dst = out.planes[std::size_t(c)];
        for (int y = 0; y < out_h; ++y) {
            const double fy = y * sy;
            int y0 = static_cast<int>(std::floor(fy));
            if (y0 > img.height - 2) y0 = std::max(0, img.height - 2);
            const double wy = img.height > 1 ? fy - y0 : 0.0;
            for (int x = 0; x < out_w; ++x) {
                const double fx = x * sx;
                int x0 = static_cast<int>(std::floor(fx));
                if (x0 > img.width - 2) x0 = std::max(0, img.width - 2);
                const double wx = img.width > 1 ? fx - x0 : 0.0;
                const std::size_t i00 = std::size_t(y0) * img.width + x0;
                const int dx = img.width > 1 ? 1 : 0;
                const int dy = img.height > 1 ? img.width : 0;
                // lerp form: exact when the interpolants agree, so constant
                // inputs survive bit-exactly
                const double top = src[i00] + wx * (src[i00 + dx] - src[i00]);
                const double bot = src[i00 + dy] + wx * (src[i00 + dy + dx] - src[i00 + dy]);
                const double v = top + wy * (bot - top);
                dst[std::size_t(y) * out_w + x] = detail::round_clamp_u8(v);
            }
        }
    }
    return out;
}

inline Image to_hsv(const Image& img) {
    if (img.space != ColorSpace::rgb) throw bad_input("to_hsv: input must be RGB");
    Image out(img.width, img.height, ColorSpace::hsv);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        detail::rgb_to_hsv_u8(img.planes[0][i], img.planes[1][i], img.planes[2][i],
                              out.planes[0][i], out.planes[1][i], out.planes[2][i]);
    }
    return out;
}

inline Image to_ycbcr(const Image& img) {
    if (img.space != ColorSpace::rgb) throw bad_input("to_ycbcr: input must be RGB");
    Image out(img.width, img.height, ColorSpace::ycbcr);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        detail::rgb_to_ycbcr_u8(img.planes[0][i], img.planes[1][i], img.planes[2][i],
                                out.planes[0][i], out.planes[1][i], out.planes[2][i]);
    }
    return out;
}

/// Converts an RGB image to the requested space (identity for RGB).
inline Image convert_color_space(const Image& img, ColorSpace target) {
    switch (target) {
        case ColorSpace::rgb:
            if (img.space != ColorSpace::rgb) throw bad_input("convert: input must be RGB");
            return img;
        case ColorSpace::hsv: return to_hsv(img);
        case ColorSpace::ycbcr: return to_ycbcr(img);
    }
    throw bad_input("convert: unknown target space");
}

} // namespace lbpf
