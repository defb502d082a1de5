#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lbpforest/errors.hpp"
#include "lbpforest/image.hpp"
#include "lbpforest/image_io.hpp" // read_file_bytes
#include "lbpforest/matrix.hpp"

namespace lbpf {

/// Extracted multi-scale features for a whole dataset, one row per
/// manifest record (same order). The manifest hash and the config JSON
/// ride along so stale cache/manifest pairings are caught at load time.
struct FeatureCache {
    ColorSpace space = ColorSpace::rgb;
    std::array<Matrix, 3> scales;
    std::uint64_t manifest_hash = 0;
    std::string config_json;

    std::size_t size() const { return scales[0].rows; }
};

namespace detail {

// On-disk layout (all integers and floats little-endian):
//   0   magic "LBPF"
//   4   u32 format version (1)
//   8   u32 color space (0 rgb, 1 hsv, 2 ycbcr)
//   12  u32 reserved (0)
//   16  u64 sample count N
//   24  u64[3] per-scale vector lengths
//   48  u64 manifest content hash (FNV-1a)
//   56  u32 config JSON length L
//   60  config JSON bytes
//   60+L  three row-major float32 matrices, N rows each, scale order
inline constexpr std::uint32_t kCacheVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += char((v >> (8 * i)) & 0xff);
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out += char((v >> (8 * i)) & 0xff);
}

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes, const std::string& what)
        : bytes_(bytes), what_(what) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    std::string str(std::size_t n) {
        need(n);
        std::string s(bytes_.begin() + long(pos_), bytes_.begin() + long(pos_ + n));
        pos_ += n;
        return s;
    }

    void floats(float* dst, std::size_t n) {
        need(n * 4);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t v = 0;
            for (int b = 0; b < 4; ++b)
                v |= std::uint32_t(bytes_[pos_ + i * 4 + std::size_t(b)]) << (8 * b);
            dst[i] = std::bit_cast<float>(v);
        }
        pos_ += n * 4;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) {
        if (bytes_.size() - pos_ < n) throw bad_input(what_ + ": truncated");
    }

    const std::vector<std::uint8_t>& bytes_;
    std::string what_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline void save_feature_cache(const FeatureCache& cache, const std::filesystem::path& file) {
    const std::size_t n = cache.scales[0].rows;
    for (const auto& m : cache.scales)
        if (m.rows != n) throw bad_input("cache scales disagree on sample count");

    std::ofstream out(file, std::ios::binary);
    if (!out) throw bad_input("cannot write feature cache: " + file.string());

    std::string header;
    header += "LBPF";
    detail::put_u32(header, detail::kCacheVersion);
    detail::put_u32(header, std::uint32_t(cache.space));
    detail::put_u32(header, 0);
    detail::put_u64(header, n);
    for (const auto& m : cache.scales) detail::put_u64(header, m.cols);
    detail::put_u64(header, cache.manifest_hash);
    detail::put_u32(header, std::uint32_t(cache.config_json.size()));
    header += cache.config_json;
    out.write(header.data(), std::streamsize(header.size()));

    std::string row;
    for (const auto& m : cache.scales) {
        for (std::size_t i = 0; i < m.rows; ++i) {
            row.clear();
            const float* src = m.row(i);
            for (std::size_t j = 0; j < m.cols; ++j)
                detail::put_u32(row, std::bit_cast<std::uint32_t>(src[j]));
            out.write(row.data(), std::streamsize(row.size()));
        }
    }
    if (!out) throw bad_input("failed writing feature cache: " + file.string());
}

inline FeatureCache load_feature_cache(const std::filesystem::path& file) {
    const std::vector<std::uint8_t> bytes = detail::read_file_bytes(file);
    const std::string what = "feature cache " + file.string();
    detail::ByteReader r(bytes, what);

    if (r.str(4) != "LBPF") throw bad_input(what + ": bad magic");
    if (r.u32() != detail::kCacheVersion) throw bad_input(what + ": unsupported version");
    const std::uint32_t space = r.u32();
    if (space > 2) throw bad_input(what + ": unknown color space tag");
    r.u32(); // reserved

    FeatureCache cache;
    cache.space = ColorSpace(space);
    const std::uint64_t n = r.u64();
    std::array<std::uint64_t, 3> lens{r.u64(), r.u64(), r.u64()};
    cache.manifest_hash = r.u64();
    cache.config_json = r.str(r.u32());

    std::uint64_t payload = 0;
    for (const auto len : lens) payload += n * len * 4;
    if (r.remaining() != payload) throw bad_input(what + ": size does not match header");

    for (int s = 0; s < 3; ++s) {
        Matrix m(n, lens[std::size_t(s)]);
        r.floats(m.data.data(), m.data.size());
        cache.scales[std::size_t(s)] = std::move(m);
    }
    return cache;
}

} // namespace lbpf
