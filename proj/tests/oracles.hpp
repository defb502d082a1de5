#pragma once

// Reference implementations the unit and acceptance tests compare against.
// Everything here is written for clarity over speed, recomputed from first
// principles per call, and kept independent of the library's internal
// machinery (no CodeMap, precomputed offset tables, cumulative-count
// tricks, or shared helpers).

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "lbpforest/eval.hpp"
#include "lbpforest/forest.hpp"
#include "lbpforest/image.hpp"
#include "lbpforest/matrix.hpp"
#include "lbpforest/rng.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Color conversion references (exact integer rational arithmetic)
// ---------------------------------------------------------------------------

inline std::uint8_t rat_round_u8(long long num, long long den) {
    // round half away from zero for nonnegative num/den, clamped to 255
    long long q = num / den;
    const long long rem = num % den;
    if (2 * rem >= den) ++q;
    return q > 255 ? 255 : std::uint8_t(q);
}

inline void hsv_pixel(int r, int g, int b, std::uint8_t& h, std::uint8_t& s,
                      std::uint8_t& v) {
    const int mx = std::max({r, g, b});
    const int mn = std::min({r, g, b});
    const int c = mx - mn;
    v = std::uint8_t(mx);
    s = mx == 0 ? 0 : rat_round_u8(255LL * c, mx);
    if (c == 0) {
        h = 0;
        return;
    }
    // hue in sixths of the circle, times chroma: sector*c + signed offset
    long long sixths_c; // in [0, 6c)
    if (mx == r) {
        sixths_c = g >= b ? (g - b) : 6LL * c - (b - g);
    } else if (mx == g) {
        sixths_c = 2LL * c + (b - r);
    } else {
        sixths_c = 4LL * c + (r - g);
    }
    h = rat_round_u8(255LL * sixths_c, 6LL * c);
}

inline void ycbcr_pixel(int r, int g, int b, std::uint8_t& y, std::uint8_t& cb,
                        std::uint8_t& cr) {
    y = rat_round_u8(299LL * r + 587LL * g + 114LL * b, 1000);
    cb = rat_round_u8(128000000LL + 500000LL * b - 168736LL * r - 331264LL * g, 1000000);
    cr = rat_round_u8(128000000LL + 500000LL * r - 418688LL * g - 81312LL * b, 1000000);
}

// Test-only inverse for the round-trip bound; plain doubles are fine here.
inline void ycbcr_to_rgb_pixel(int y, int cb, int cr, std::uint8_t& r, std::uint8_t& g,
                               std::uint8_t& b) {
    const double yd = y, cbd = cb - 128.0, crd = cr - 128.0;
    const auto clamp8 = [](double v) {
        const long q = std::lround(v);
        return std::uint8_t(q < 0 ? 0 : q > 255 ? 255 : q);
    };
    r = clamp8(yd + 1.402 * crd);
    g = clamp8(yd - 0.344136 * cbd - 0.714136 * crd);
    b = clamp8(yd + 1.772 * cbd);
}

// ---------------------------------------------------------------------------
// Bilinear resize reference
// ---------------------------------------------------------------------------

inline lbpf::Image resize_bilinear(const lbpf::Image& src, int out_w, int out_h) {
    lbpf::Image out(out_w, out_h, src.space);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < out_h; ++y) {
            for (int x = 0; x < out_w; ++x) {
                // corner-aligned source position, recomputed per pixel
                const double fx =
                    out_w > 1 ? double(x) * (src.width - 1) / (out_w - 1) : 0.0;
                const double fy =
                    out_h > 1 ? double(y) * (src.height - 1) / (out_h - 1) : 0.0;
                int x0 = int(std::floor(fx)), y0 = int(std::floor(fy));
                x0 = std::clamp(x0, 0, std::max(0, src.width - 2));
                y0 = std::clamp(y0, 0, std::max(0, src.height - 2));
                const double wx = src.width > 1 ? fx - x0 : 0.0;
                const double wy = src.height > 1 ? fy - y0 : 0.0;
                const int x1 = std::min(x0 + 1, src.width - 1);
                const int y1 = std::min(y0 + 1, src.height - 1);
                const double top =
                    src.at(c, x0, y0) + wx * (src.at(c, x1, y0) - src.at(c, x0, y0));
                const double bot =
                    src.at(c, x0, y1) + wx * (src.at(c, x1, y1) - src.at(c, x0, y1));
                const double v = top + wy * (bot - top);
                const long q = std::lround(v);
                out.set(c, x, y, std::uint8_t(q < 0 ? 0 : q > 255 ? 255 : q));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Uniform-LBP references
// ---------------------------------------------------------------------------

inline int circular_transitions(std::uint32_t pattern, int p) {
    const std::uint32_t mask = (p == 32) ? ~0u : ((1u << p) - 1u);
    const std::uint32_t rotated = ((pattern << 1) | (pattern >> (p - 1))) & mask;
    return std::popcount((pattern ^ rotated) & mask);
}

/// u2 table built by scanning every P-bit pattern in ascending order and
/// classifying it with the transition rule alone.
struct U2Table {
    int p;
    std::vector<std::uint32_t> uniform; // ascending
    std::size_t catch_all;

    explicit U2Table(int p_) : p(p_) {
        const std::uint64_t total = std::uint64_t(1) << p;
        for (std::uint64_t v = 0; v < total; ++v)
            if (circular_transitions(std::uint32_t(v), p) <= 2)
                uniform.push_back(std::uint32_t(v));
        catch_all = uniform.size();
    }

    std::size_t bin(std::uint32_t pattern) const {
        const auto it = std::lower_bound(uniform.begin(), uniform.end(), pattern);
        if (it != uniform.end() && *it == pattern)
            return std::size_t(it - uniform.begin());
        return catch_all;
    }
};

/// Raw P-bit pattern at one pixel, brute force: trig per neighbor, per-axis
/// integer snapping, guarded lerp sampling of the corner-minus-center
/// differences, sgn(x) = 1 for x >= 0.
inline std::uint32_t lbp_pattern_at(const std::vector<std::uint8_t>& plane, int width,
                                    int x, int y, int p, double radius) {
    const double center = plane[std::size_t(y) * width + x];
    std::uint32_t pattern = 0;
    for (int n = 0; n < p; ++n) {
        const double angle = 2.0 * std::acos(-1.0) * n / p;
        double dx = radius * std::cos(angle);
        double dy = -radius * std::sin(angle);
        if (std::abs(dx - std::round(dx)) < 1e-6) dx = std::round(dx);
        if (std::abs(dy - std::round(dy)) < 1e-6) dy = std::round(dy);
        const double sx = x + dx, sy = y + dy;
        const int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
        const double wx = sx - x0, wy = sy - y0;
        const auto px = [&](int xx, int yy) -> double {
            return plane[std::size_t(yy) * width + xx] - center;
        };
        const double a = px(x0, y0);
        const double bv = wx > 0.0 ? px(x0 + 1, y0) : a;
        const double cv = wy > 0.0 ? px(x0, y0 + 1) : a;
        const double dv = (wx > 0.0 && wy > 0.0) ? px(x0 + 1, y0 + 1) : cv;
        const double top = a + wx * (bv - a);
        const double bot = cv + wx * (dv - cv);
        const double d = top + wy * (bot - top);
        if (d >= 0.0) pattern |= (1u << n);
    }
    return pattern;
}

/// Per-region histogram over brute-force codes: direct count, then divide.
inline std::vector<double> region_histogram(const std::vector<std::uint8_t>& plane,
                                            int width, int height, const U2Table& table,
                                            double radius, int x0, int y0, int w, int h) {
    const int margin = int(std::ceil(radius));
    std::vector<double> hist(table.catch_all + 1, 0.0);
    std::size_t total = 0;
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) {
            if (x < margin || y < margin || x >= width - margin || y >= height - margin)
                continue;
            hist[table.bin(lbp_pattern_at(plane, width, x, y, table.p, radius))] += 1.0;
            ++total;
        }
    }
    if (total > 0)
        for (auto& v : hist) v /= double(total);
    return hist;
}

// ---------------------------------------------------------------------------
// Equal-error-rate sweep reference
// ---------------------------------------------------------------------------

/// O(n^2) recount at every candidate threshold, then the crossing search
/// and interpolation spelled out longhand.
inline lbpf::EerResult eer(const std::vector<lbpf::ScoredSample>& samples) {
    std::vector<double> genuine, spoof, thresholds;
    for (const auto& s : samples) {
        (s.label == lbpf::kGenuine ? genuine : spoof).push_back(s.score);
        thresholds.push_back(s.score);
    }
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.push_back(thresholds.back() + 1.0);

    const auto far_of = [&](double t) {
        std::size_t n = 0;
        for (double s : spoof) n += s < t;
        return double(n) / double(spoof.size());
    };
    const auto frr_of = [&](double t) {
        std::size_t n = 0;
        for (double s : genuine) n += s >= t;
        return double(n) / double(genuine.size());
    };

    double prev_far = far_of(thresholds[0]);
    double prev_frr = frr_of(thresholds[0]);
    if (prev_far >= prev_frr) return {prev_far, thresholds[0]};
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        const double far = far_of(thresholds[i]);
        const double frr = frr_of(thresholds[i]);
        if (far < frr) {
            prev_far = far;
            prev_frr = frr;
            continue;
        }
        if (far == frr) return {far, thresholds[i]};
        const double a = prev_frr - prev_far;          // positive
        const double b = far - frr;                    // positive
        const double alpha = a / (a + b);
        return {prev_far + alpha * (far - prev_far),
                thresholds[i - 1] + alpha * (thresholds[i] - thresholds[i - 1])};
    }
    return {1.0, thresholds.back()}; // unreachable with the sentinel
}

inline double hter_at(const std::vector<lbpf::ScoredSample>& samples, double threshold) {
    std::size_t fa = 0, ns = 0, fr = 0, ng = 0;
    for (const auto& s : samples) {
        if (s.label == lbpf::kSpoof) {
            ++ns;
            fa += s.score < threshold;
        } else {
            ++ng;
            fr += s.score >= threshold;
        }
    }
    return 0.5 * (double(fa) / double(ns) + double(fr) / double(ng));
}

// ---------------------------------------------------------------------------
// Synthetic datasets for ensemble tests
// ---------------------------------------------------------------------------

struct Dataset {
    lbpf::Matrix x;
    std::vector<int> y;
};

/// 2-D XOR with a guard band around the decision boundaries.
inline Dataset xor_dataset(std::size_t n, std::uint64_t seed) {
    Dataset d;
    d.x = lbpf::Matrix(n, 2);
    d.y.resize(n);
    lbpf::Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        double a, b;
        do a = rng.real01(); while (std::abs(a - 0.5) < 0.02);
        do b = rng.real01(); while (std::abs(b - 0.5) < 0.02);
        d.x.at(i, 0) = float(a);
        d.x.at(i, 1) = float(b);
        d.y[i] = (a > 0.5) != (b > 0.5) ? 1 : 0;
    }
    return d;
}

/// Two Gaussian blobs separated along every axis.
inline Dataset blob_dataset(std::size_t n, std::size_t dims, double separation,
                            std::uint64_t seed) {
    Dataset d;
    d.x = lbpf::Matrix(n, dims);
    d.y.resize(n);
    lbpf::Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = int(i % 2);
        const double mean = label == 0 ? -separation / 2 : separation / 2;
        for (std::size_t j = 0; j < dims; ++j) d.x.at(i, j) = float(mean + rng.normal());
        d.y[i] = label;
    }
    return d;
}

/// 1-D with a hard gap: class 0 in [-1, -0.1], class 1 in [0.1, 1].
inline Dataset separable_1d(std::size_t n, std::uint64_t seed) {
    Dataset d;
    d.x = lbpf::Matrix(n, 1);
    d.y.resize(n);
    lbpf::Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = int(i % 2);
        d.x.at(i, 0) = float(label == 0 ? rng.real(-1.0, -0.1) : rng.real(0.1, 1.0));
        d.y[i] = label;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Test fixture file writers (independent of the library's decoders)
// ---------------------------------------------------------------------------

inline void write_ppm(const std::string& path, const lbpf::Image& img) {
    std::ofstream f(path, std::ios::binary);
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) f.put(char(img.at(c, x, y)));
}

inline void write_bmp24(const std::string& path, const lbpf::Image& img) {
    const int w = img.width, h = img.height;
    const int row = (w * 3 + 3) & ~3;
    const std::uint32_t data_size = std::uint32_t(row) * h;
    const std::uint32_t file_size = 54 + data_size;
    std::ofstream f(path, std::ios::binary);
    const auto u16 = [&](std::uint16_t v) { f.put(char(v & 0xff)); f.put(char(v >> 8)); };
    const auto u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) f.put(char((v >> (8 * i)) & 0xff));
    };
    f.put('B'); f.put('M');
    u32(file_size); u32(0); u32(54);
    u32(40); u32(std::uint32_t(w)); u32(std::uint32_t(h));
    u16(1); u16(24); u32(0); u32(data_size);
    u32(2835); u32(2835); u32(0); u32(0);
    for (int y = h - 1; y >= 0; --y) { // bottom-up rows, BGR order
        int written = 0;
        for (int x = 0; x < w; ++x) {
            f.put(char(img.at(2, x, y)));
            f.put(char(img.at(1, x, y)));
            f.put(char(img.at(0, x, y)));
            written += 3;
        }
        while (written++ < row) f.put(0);
    }
}

inline lbpf::Image random_image(int w, int h, std::uint64_t seed,
                                lbpf::ColorSpace space = lbpf::ColorSpace::rgb) {
    lbpf::Image img(w, h, space);
    lbpf::Rng rng(seed);
    for (int c = 0; c < 3; ++c)
        for (auto& v : img.planes[std::size_t(c)]) v = std::uint8_t(rng.below(256));
    return img;
}

inline std::vector<std::uint8_t> random_plane(int w, int h, std::uint64_t seed,
                                              int max_value = 255) {
    std::vector<std::uint8_t> plane(std::size_t(w) * h);
    lbpf::Rng rng(seed);
    for (auto& v : plane) v = std::uint8_t(rng.below(std::uint64_t(max_value) + 1));
    return plane;
}

/// Node-for-node equality, bitwise on thresholds and distributions.
inline bool forests_identical(const lbpf::Forest& a, const lbpf::Forest& b) {
    if (a.kind != b.kind || a.seed != b.seed || a.n_features != b.n_features) return false;
    if (a.trees.size() != b.trees.size()) return false;
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
        const auto& na = a.trees[t].nodes;
        const auto& nb = b.trees[t].nodes;
        if (na.size() != nb.size()) return false;
        for (std::size_t i = 0; i < na.size(); ++i) {
            if (na[i].feature != nb[i].feature || na[i].threshold != nb[i].threshold ||
                na[i].left != nb[i].left || na[i].right != nb[i].right ||
                na[i].dist != nb[i].dist)
                return false;
        }
    }
    return true;
}

} // namespace oracle
