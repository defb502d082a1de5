#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lbpforest/errors.hpp"

namespace lbpf {

/// Maps raw P-bit circular patterns to uniform-pattern histogram bins.
///
/// A pattern is uniform when its circular bit string has at most two 0/1
/// transitions. There are P(P-1)+2 such patterns; each gets its own bin,
/// ordered by ascending raw pattern value, and every other pattern shares
/// the single trailing bin. Total bins: P(P-1)+3.
///
/// The uniform set is generated combinatorially (the all-zeros pattern,
/// the all-ones pattern, and every rotation of every run length of ones)
/// rather than by scanning all 2^P patterns, which keeps P=24 cheap.
class U2Mapping {
public:
    explicit U2Mapping(int neighbors) : p_(neighbors) {
        if (p_ != 8 && p_ != 16 && p_ != 24)
            throw bad_input("unsupported neighbor count (8, 16, or 24 required)");
        uniform_.reserve(std::size_t(p_) * (p_ - 1) + 2);
        uniform_.push_back(0);
        for (int run = 1; run < p_; ++run) {
            const std::uint32_t base = (std::uint32_t(1) << run) - 1;
            for (int rot = 0; rot < p_; ++rot) uniform_.push_back(rotate_left(base, rot));
        }
        uniform_.push_back(mask());
        std::sort(uniform_.begin(), uniform_.end());

        if (p_ <= 16) {
            table_.assign(std::size_t(1) << p_, std::uint16_t(uniform_.size()));
            for (std::size_t i = 0; i < uniform_.size(); ++i)
                table_[uniform_[i]] = std::uint16_t(i);
        }
    }

    int neighbor_count() const { return p_; }
    std::size_t uniform_count() const { return uniform_.size(); }     // P(P-1)+2
    std::size_t bin_count() const { return uniform_.size() + 1; }     // P(P-1)+3
    std::uint32_t mask() const { return p_ == 32 ? ~0u : (std::uint32_t(1) << p_) - 1; }

    /// Bin index for a raw pattern; non-uniform patterns all land in the
    /// last bin, index P(P-1)+2.
    std::uint16_t bin(std::uint32_t pattern) const {
        if (!table_.empty()) return table_[pattern];
        const auto it = std::lower_bound(uniform_.begin(), uniform_.end(), pattern);
        if (it != uniform_.end() && *it == pattern)
            return std::uint16_t(it - uniform_.begin());
        return std::uint16_t(uniform_.size());
    }

    const std::vector<std::uint32_t>& uniform_patterns() const { return uniform_; }

private:
    std::uint32_t rotate_left(std::uint32_t v, int k) const {
        k %= p_;
        if (k == 0) return v & mask();
        return ((v << k) | (v >> (p_ - k))) & mask();
    }

    int p_;
    std::vector<std::uint32_t> uniform_; // ascending
    std::vector<std::uint16_t> table_;   // dense lookup, only for P <= 16
};

/// (P, R) descriptor parameters with the u2 bin mapping and precomputed
/// neighbor sampling geometry.
///
/// Neighbor n (1-based) sits at angle 2*pi*(n-1)/P on the radius-R circle,
/// proceeding counter-clockwise (y up), and contributes bit 2^(n-1).
/// Offsets within 1e-6 of an integer are snapped so that on-grid neighbors
/// are read directly instead of interpolated.
struct LbpConfig {
    int neighbors;
    double radius;
    U2Mapping map;

    struct NeighborOffset {
        int ix, iy;          // integer base offset
        double wx, wy;       // fractional part toward (ix+1, iy+1)
        bool exact;          // wx == wy == 0
    };
    std::vector<NeighborOffset> offsets;

    LbpConfig(int p, double r) : neighbors(p), radius(r), map(p) {
        if (r < 1.0 || r > 3.0) throw bad_input("unsupported radius (1..3 required)");
        offsets.reserve(std::size_t(p));
        for (int n = 0; n < p; ++n) {
            const double angle = 2.0 * 3.141592653589793238462643 * n / p;
            double dx = r * std::cos(angle);
            double dy = -r * std::sin(angle);
            if (std::abs(dx - std::round(dx)) < 1e-6) dx = std::round(dx);
            if (std::abs(dy - std::round(dy)) < 1e-6) dy = std::round(dy);
            NeighborOffset o;
            o.ix = int(std::floor(dx));
            o.iy = int(std::floor(dy));
            o.wx = dx - o.ix;
            o.wy = dy - o.iy;
            o.exact = (o.wx == 0.0 && o.wy == 0.0);
            offsets.push_back(o);
        }
    }

    int margin() const { return int(std::ceil(radius)); }
};

/// Per-pixel u2 bin indices for one plane. Pixels closer than ceil(R) to
/// any border are invalid and never counted.
struct CodeMap {
    int width = 0;
    int height = 0;
    int margin = 0;
    std::vector<std::uint16_t> codes;
    std::vector<std::uint8_t> valid;

    bool is_valid(int x, int y) const { return valid[std::size_t(y) * width + x] != 0; }
    std::uint16_t code(int x, int y) const { return codes[std::size_t(y) * width + x]; }
};

/// Computes the LBP code map of a single 8-bit plane.
///
/// Each neighbor is sampled with bilinear interpolation of the
/// corner-minus-center differences (kept in floating point), thresholded
/// with sgn(x) = 1 for x >= 0 (so flat regions produce the all-ones
/// pattern), packed into a P-bit word, and mapped through the u2 table.
/// Interpolating differences rather than absolute values makes codes
/// exactly invariant under a constant intensity shift: the differences do
/// not change, so neither does any rounding.
inline CodeMap lbp_codes(std::span<const std::uint8_t> plane, int width, int height,
                         const LbpConfig& cfg) {
    const int m = cfg.margin();
    if (width < 2 * m + 1 || height < 2 * m + 1)
        throw bad_input("plane too small for LBP radius");
    if (plane.size() != std::size_t(width) * height)
        throw bad_input("plane size does not match dimensions");

    CodeMap out;
    out.width = width;
    out.height = height;
    out.margin = m;
    out.codes.assign(plane.size(), 0);
    out.valid.assign(plane.size(), 0);

    const std::uint8_t* img = plane.data();
    for (int y = m; y < height - m; ++y) {
        for (int x = m; x < width - m; ++x) {
            const double center = img[std::size_t(y) * width + x];
            std::uint32_t pattern = 0;
            for (int n = 0; n < cfg.neighbors; ++n) {
                const auto& o = cfg.offsets[std::size_t(n)];
                const std::size_t base =
                    std::size_t(y + o.iy) * width + std::size_t(x + o.ix);
                double d;
                if (o.exact) {
                    d = img[base] - center;
                } else {
                    // lerp form over corner-center differences: exact when
                    // the corners agree (flat regions give d == 0, never a
                    // hair below) and untouched by constant shifts
                    const double d00 = img[base] - center;
                    const double d10 = o.wx > 0.0 ? img[base + 1] - center : d00;
                    const double d01 = o.wy > 0.0 ? img[base + width] - center : d00;
                    const double d11 =
                        (o.wx > 0.0 && o.wy > 0.0) ? img[base + width + 1] - center : d01;
                    const double top = d00 + o.wx * (d10 - d00);
                    const double bot = d01 + o.wx * (d11 - d01);
                    d = top + o.wy * (bot - top);
                }
                if (d >= 0.0) pattern |= std::uint32_t(1) << n;
            }
            const std::size_t i = std::size_t(y) * width + x;
            out.codes[i] = cfg.map.bin(pattern);
            out.valid[i] = 1;
        }
    }
    return out;
}

/// L1-normalized histogram of the valid codes inside [x0, x0+w) x [y0, y0+h).
/// Returns the all-zero vector when the region holds no valid pixel.
inline std::vector<double> region_histogram(const CodeMap& codes, int x0, int y0,
                                            int w, int h, std::size_t bins) {
    if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > codes.width || y0 + h > codes.height)
        throw bad_input("histogram region out of bounds");
    std::vector<double> hist(bins, 0.0);
    std::size_t total = 0;
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) {
            const std::size_t i = std::size_t(y) * codes.width + x;
            if (!codes.valid[i]) continue;
            hist[codes.codes[i]] += 1.0;
            ++total;
        }
    }
    if (total > 0) {
        for (auto& v : hist) v /= double(total);
    }
    return hist;
}

} // namespace lbpf
