#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbpforest/errors.hpp"
#include "lbpforest/image.hpp"
#include "lbpforest/image_io.hpp"
#include "lbpforest/manifest.hpp"
#include "lbpforest/model_io.hpp"
#include "lbpforest/rng.hpp"

namespace lbpf {

/// Bumped whenever the generator's output changes for the same inputs, so
/// pinned benchmark numbers never drift silently.
inline constexpr int kSynthGeneratorVersion = 1;

namespace detail {

inline std::uint8_t clamp_u8(double v) {
    return std::uint8_t(std::clamp(std::lround(v), 0L, 255L));
}

/// Smoothed colored noise plus fine grain and a gentle shading gradient.
/// Subjects share a color palette so their images correlate.
inline Image synth_signal(std::uint64_t seed, std::size_t subject, std::size_t index) {
    Rng palette(derive_seed(seed, 0x500000 + subject));
    double base[3];
    for (auto& b : base) b = 80.0 + double(palette.below(101)); // [80, 180]

    Rng rng(derive_seed(seed, 0x100000 + index));

    // coarse color field, upsampled
    Image coarse(16, 16, ColorSpace::rgb);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                coarse.set(c, x, y,
                           clamp_u8(base[c] + double(rng.below(61)) - 30.0));
    Image img = resize_bilinear(coarse, kInputSize, kInputSize);

    const double gx = rng.real(-8.0, 8.0);
    const double gy = rng.real(-8.0, 8.0);
    const int grain = 10;
    for (int y = 0; y < kInputSize; ++y) {
        for (int x = 0; x < kInputSize; ++x) {
            const double shade =
                (gx * (x - kInputSize / 2) + gy * (y - kInputSize / 2)) / double(kInputSize / 2);
            for (int c = 0; c < 3; ++c) {
                const double noise = double(rng.below(2 * grain + 1)) - grain;
                img.set(c, x, y, clamp_u8(double(img.at(c, x, y)) + noise + shade));
            }
        }
    }
    return img;
}

inline void binomial_blur(Image& img) {
    std::vector<int> tmp(std::size_t(kInputSize) * kInputSize);
    for (int c = 0; c < 3; ++c) {
        auto& plane = img.planes[std::size_t(c)];
        for (int y = 0; y < kInputSize; ++y) {
            for (int x = 0; x < kInputSize; ++x) {
                const int xl = std::max(0, x - 1), xr = std::min(kInputSize - 1, x + 1);
                tmp[std::size_t(y) * kInputSize + x] =
                    plane[std::size_t(y) * kInputSize + xl] +
                    2 * plane[std::size_t(y) * kInputSize + x] +
                    plane[std::size_t(y) * kInputSize + xr];
            }
        }
        for (int y = 0; y < kInputSize; ++y) {
            for (int x = 0; x < kInputSize; ++x) {
                const int yu = std::max(0, y - 1), yd = std::min(kInputSize - 1, y + 1);
                const int v = tmp[std::size_t(yu) * kInputSize + x] +
                              2 * tmp[std::size_t(y) * kInputSize + x] +
                              tmp[std::size_t(yd) * kInputSize + x];
                plane[std::size_t(y) * kInputSize + x] = std::uint8_t((v + 8) / 16);
            }
        }
    }
}

/// 8x8 orthonormal DCT-II coefficient table: table[u][x].
inline const std::array<std::array<double, 8>, 8>& dct_table() {
    static const auto table = [] {
        std::array<std::array<double, 8>, 8> t{};
        const double pi = std::acos(-1.0);
        for (int u = 0; u < 8; ++u) {
            const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int x = 0; x < 8; ++x)
                t[std::size_t(u)][std::size_t(x)] =
                    cu * std::cos((2 * x + 1) * u * pi / 16.0);
        }
        return t;
    }();
    return table;
}

/// Blocking artifacts: per 8x8 block, quantize DCT coefficients with a
/// frequency-weighted step table and transform back.
inline void dct_quantize(Image& img) {
    const auto& t = dct_table();
    double block[8][8], coef[8][8];
    for (int c = 0; c < 3; ++c) {
        auto& plane = img.planes[std::size_t(c)];
        for (int by = 0; by < kInputSize; by += 8) {
            for (int bx = 0; bx < kInputSize; bx += 8) {
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        block[y][x] =
                            double(plane[std::size_t(by + y) * kInputSize + (bx + x)]) - 128.0;
                for (int u = 0; u < 8; ++u) {
                    for (int v = 0; v < 8; ++v) {
                        double s = 0.0;
                        for (int y = 0; y < 8; ++y)
                            for (int x = 0; x < 8; ++x)
                                s += block[y][x] * t[std::size_t(u)][std::size_t(y)] *
                                     t[std::size_t(v)][std::size_t(x)];
                        const double q = 18.0 + 3.0 * (u + v);
                        coef[u][v] = std::round(s / q) * q;
                    }
                }
                for (int y = 0; y < 8; ++y) {
                    for (int x = 0; x < 8; ++x) {
                        double s = 0.0;
                        for (int u = 0; u < 8; ++u)
                            for (int v = 0; v < 8; ++v)
                                s += coef[u][v] * t[std::size_t(u)][std::size_t(y)] *
                                     t[std::size_t(v)][std::size_t(x)];
                        plane[std::size_t(by + y) * kInputSize + (bx + x)] =
                            clamp_u8(s + 128.0);
                    }
                }
            }
        }
    }
}

inline void add_moire(Image& img, Rng& rng) {
    const double pi = std::acos(-1.0);
    const double fx = rng.real(0.05, 0.15);
    const double fy = rng.real(0.05, 0.15);
    const double phase = rng.real(0.0, 2.0 * pi);
    const double amp = rng.real(5.0, 8.0);
    for (int y = 0; y < kInputSize; ++y) {
        for (int x = 0; x < kInputSize; ++x) {
            const double s = amp * std::sin(2.0 * pi * (fx * x + fy * y) + phase);
            for (int c = 0; c < 3; ++c)
                img.set(c, x, y, clamp_u8(double(img.at(c, x, y)) + s));
        }
    }
}

/// Recapture simulation applied to a genuine signal: mild blur, JPEG-style
/// blocking, and a sinusoidal screen pattern.
inline Image synth_recapture(const Image& genuine, std::uint64_t seed, std::size_t index) {
    Image img = genuine;
    binomial_blur(img);
    dct_quantize(img);
    Rng rng(derive_seed(seed, 0x900000 + index));
    add_moire(img, rng);
    return img;
}

} // namespace detail

/// Writes `n_per_class` genuine/spoof image pairs (each spoof is the
/// recaptured version of its genuine signal) plus `manifest.csv` and a
/// `synth.json` version stamp. Returns the manifest, reloaded through the
/// normal loader so all its validation applies. Layout under `dir`:
/// images/ g_NNNN.png and s_NNNN.png. Subjects own four consecutive
/// signals; consecutive signal pairs form two-frame groups; fold =
/// subject parity (0 = train half, 1 = test half, subject-disjoint).
inline DatasetManifest generate_synth_dataset(const std::filesystem::path& dir,
                                              std::size_t n_per_class, std::uint64_t seed) {
    if (n_per_class == 0) throw bad_input("n_per_class must be positive");
    std::filesystem::create_directories(dir / "images");

    const std::size_t n_subjects = std::max<std::size_t>(1, n_per_class / 4);

    DatasetManifest m;
    m.dir = dir;
    char name[64];
    for (std::size_t i = 0; i < n_per_class; ++i) {
        const std::size_t subject = std::min(i / 4, n_subjects - 1);
        const Image genuine = detail::synth_signal(seed, subject, i);
        const Image spoof = detail::synth_recapture(genuine, seed, i);

        const std::string subject_id = "subj" + std::to_string(subject);
        const std::string clip = subject_id + "_c" + std::to_string(i / 2);

        std::snprintf(name, sizeof(name), "images/g_%04zu.png", i);
        save_png(genuine, dir / name);
        m.records.push_back({name, kGenuine, subject_id, clip + "_g", int(subject % 2)});

        std::snprintf(name, sizeof(name), "images/s_%04zu.png", i);
        save_png(spoof, dir / name);
        m.records.push_back({name, kSpoof, subject_id, clip + "_s", int(subject % 2)});
    }
    save_manifest(m, dir / "manifest.csv");

    const nlohmann::json stamp{{"generator_version", kSynthGeneratorVersion},
                               {"n_per_class", n_per_class},
                               {"seed", seed}};
    detail::write_text_file(dir / "synth.json", stamp.dump(2) + "\n");

    return load_manifest(dir / "manifest.csv");
}

} // namespace lbpf
