#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lbpforest/errors.hpp"
#include "lbpforest/forest.hpp"
#include "lbpforest/image.hpp"
#include "lbpforest/lbp.hpp"
#include "lbpforest/matrix.hpp"

namespace lbpf {

inline constexpr int kInputSize = 128;

// ---------------------------------------------------------------------------
// Multi-scale color-LBP representations
// ---------------------------------------------------------------------------

enum class ScaleId : int { s1 = 0, s2 = 1, s3 = 2 };

inline constexpr std::size_t kNumScales = 3;

struct ScaleSpec {
    int neighbors;
    int radius;
    std::size_t bins; // P(P-1)+3
};

inline ScaleSpec scale_spec(ScaleId id) {
    switch (id) {
        case ScaleId::s1: return {8, 1, 59};
        case ScaleId::s2: return {16, 2, 243};
        case ScaleId::s3: return {24, 3, 555};
    }
    throw bad_input("unknown scale id");
}

/// Overlapping patch lattice; the defaults tile 128x128 into 7x7 windows.
struct PatchGrid {
    int window = 32;
    int stride = 16;
    int rows = 7;
    int cols = 7;

    PatchGrid() = default;
    PatchGrid(int image_w, int image_h, int window_, int stride_)
        : window(window_), stride(stride_) {
        if (window <= 0 || stride <= 0 || image_w < window || image_h < window)
            throw bad_input("patch grid does not fit the image");
        cols = (image_w - window) / stride + 1;
        rows = (image_h - window) / stride + 1;
    }

    int count() const { return rows * cols; }
    int x0(int patch) const { return (patch % cols) * stride; }
    int y0(int patch) const { return (patch / cols) * stride; }
};

inline std::size_t scale_length(ScaleId id) {
    const PatchGrid grid;
    return std::size_t(grid.count()) * 3 * scale_spec(id).bins; // 8673 / 35721 / 81585
}

/// Shared per-scale descriptor configs (the u2 tables are not free to build,
/// especially the dense 16-neighbor one).
inline const LbpConfig& scale_config(ScaleId id) {
    static const LbpConfig cfgs[3] = {LbpConfig(8, 1.0), LbpConfig(16, 2.0),
                                      LbpConfig(24, 3.0)};
    return cfgs[int(id)];
}

/// One sample's flat feature vector at one scale. Layout is positional:
/// value(patch p, channel c, bin b) sits at ((p*3 + c)*B + b), patches
/// row-major from the top-left.
inline std::vector<float> extract_scale(const Image& img, ScaleId id) {
    if (img.width != kInputSize || img.height != kInputSize)
        throw bad_input("extract_scale expects a 128x128 image");

    const ScaleSpec spec = scale_spec(id);
    const LbpConfig& cfg = scale_config(id);
    const PatchGrid grid(img.width, img.height, 32, 16);
    const std::size_t bins = spec.bins;

    std::vector<float> out(std::size_t(grid.count()) * 3 * bins, 0.0f);
    for (int c = 0; c < 3; ++c) {
        const CodeMap codes = lbp_codes(img.planes[std::size_t(c)], img.width, img.height, cfg);
        for (int p = 0; p < grid.count(); ++p) {
            const std::vector<double> hist =
                region_histogram(codes, grid.x0(p), grid.y0(p), grid.window, grid.window, bins);
            float* dst = out.data() + (std::size_t(p) * 3 + std::size_t(c)) * bins;
            for (std::size_t b = 0; b < bins; ++b) dst[b] = float(hist[b]);
        }
    }
    return out;
}

inline std::array<std::vector<float>, kNumScales> extract_all_scales(const Image& img) {
    return {extract_scale(img, ScaleId::s1), extract_scale(img, ScaleId::s2),
            extract_scale(img, ScaleId::s3)};
}

// ---------------------------------------------------------------------------
// Grained scanning baseline
// ---------------------------------------------------------------------------

struct GsmWindowSpec {
    int window;
    int stride;
};

/// Window/stride pairs scanned by the baseline, coarsest last.
inline const std::array<GsmWindowSpec, 3>& gsm_window_specs() {
    static const std::array<GsmWindowSpec, 3> specs{{{16, 8}, {32, 16}, {64, 32}}};
    return specs;
}

inline std::size_t gsm_patch_dim(int window) { return std::size_t(window) * window * 3; }

inline std::size_t gsm_length(const GsmWindowSpec& spec) {
    const PatchGrid grid(kInputSize, kInputSize, spec.window, spec.stride);
    return std::size_t(grid.count()) * 4; // RF + CRF class vectors per patch
}

/// Raw-pixel patch vectors in row-major patch order; each row is
/// channel-major (all of channel 0, then 1, then 2), window*window floats
/// per channel.
inline Matrix collect_patches(const Image& img, int window, int stride) {
    if (img.width != kInputSize || img.height != kInputSize)
        throw bad_input("collect_patches expects a 128x128 image");
    const PatchGrid grid(img.width, img.height, window, stride);
    Matrix out(std::size_t(grid.count()), gsm_patch_dim(window));
    for (int p = 0; p < grid.count(); ++p) {
        float* dst = out.row(std::size_t(p));
        const int px = grid.x0(p), py = grid.y0(p);
        for (int c = 0; c < 3; ++c) {
            const std::uint8_t* plane = img.planes[std::size_t(c)].data();
            for (int y = 0; y < window; ++y)
                for (int x = 0; x < window; ++x)
                    *dst++ = float(plane[std::size_t(py + y) * img.width + (px + x)]);
        }
    }
    return out;
}

struct GsmPatchSet {
    Matrix x;
    std::vector<int> y;
};

/// Gathers labeled patches from a whole image set. When the total exceeds
/// `max_patches` (0 = unlimited), an evenly spaced deterministic subset is
/// kept; even spacing preserves the image interleaving, so class balance
/// follows the input's.
inline GsmPatchSet collect_patch_dataset(std::span<const Image> images,
                                         std::span<const int> labels, int window, int stride,
                                         std::size_t max_patches = 0) {
    if (images.size() != labels.size())
        throw bad_input("image/label count mismatch");
    if (images.empty()) throw degenerate_data("empty patch set");

    const PatchGrid grid(kInputSize, kInputSize, window, stride);
    const std::size_t per_image = std::size_t(grid.count());
    const std::size_t total = per_image * images.size();
    const std::size_t kept = (max_patches == 0 || total <= max_patches) ? total : max_patches;

    GsmPatchSet out;
    out.x = Matrix(kept, gsm_patch_dim(window));
    out.y.resize(kept);

    std::size_t cached_image = images.size();
    Matrix cache;
    for (std::size_t i = 0; i < kept; ++i) {
        const std::size_t global = kept == total ? i : i * total / kept;
        const std::size_t img_idx = global / per_image;
        const std::size_t patch_idx = global % per_image;
        if (img_idx != cached_image) {
            cache = collect_patches(images[img_idx], window, stride);
            cached_image = img_idx;
        }
        std::copy(cache.row(patch_idx), cache.row(patch_idx) + cache.cols, out.x.row(i));
        out.y[i] = labels[img_idx];
    }
    return out;
}

/// The scanning-forest pair for one window size.
struct GsmForests {
    int window = 0;
    Forest rf;
    Forest crf;
};

inline GsmForests gsm_train(const Matrix& patches, const std::vector<int>& labels, int window,
                            std::size_t n_trees, std::uint64_t seed,
                            const TrainOptions& opts = {}, unsigned workers = 1) {
    if (patches.rows == 0) throw degenerate_data("empty patch set");
    if (patches.cols != gsm_patch_dim(window))
        throw bad_input("patch width does not match window size");
    GsmForests out;
    out.window = window;
    out.rf = train_random_forest(patches, labels, n_trees, derive_seed(seed, 0), opts, workers);
    out.crf = train_completely_random_forest(patches, labels, n_trees, derive_seed(seed, 1),
                                             opts, workers);
    return out;
}

/// Scans the image and concatenates, per patch in row-major order, the RF
/// class vector followed by the CRF class vector.
inline std::vector<float> gsm_representation(const Image& img, const GsmForests& forests,
                                             int window, int stride) {
    if (forests.window != window)
        throw bad_input("forests were trained for a different window size");
    if (forests.rf.n_features != gsm_patch_dim(window) ||
        forests.crf.n_features != gsm_patch_dim(window))
        throw bad_input("forest dimensionality does not match window size");

    const Matrix patches = collect_patches(img, window, stride);
    std::vector<float> out;
    out.reserve(patches.rows * 4);
    for (std::size_t p = 0; p < patches.rows; ++p) {
        const auto a = forests.rf.predict_proba(patches.row_span(p));
        const auto b = forests.crf.predict_proba(patches.row_span(p));
        out.push_back(float(a[0]));
        out.push_back(float(a[1]));
        out.push_back(float(b[0]));
        out.push_back(float(b[1]));
    }
    return out;
}

/// Full grained-scanning model: one forest pair per window size.
struct GsmModel {
    std::size_t n_trees = 0;
    std::uint64_t seed = 0;
    std::vector<GsmForests> forests; // aligned with gsm_window_specs()
};

inline GsmModel gsm_train_all(std::span<const Image> images, std::span<const int> labels,
                              std::size_t n_trees, std::uint64_t seed,
                              std::size_t max_patches_per_window = 0,
                              const TrainOptions& opts = {}, unsigned workers = 1) {
    GsmModel model;
    model.n_trees = n_trees;
    model.seed = seed;
    const auto& specs = gsm_window_specs();
    for (std::size_t w = 0; w < specs.size(); ++w) {
        const GsmPatchSet set = collect_patch_dataset(images, labels, specs[w].window,
                                                      specs[w].stride, max_patches_per_window);
        model.forests.push_back(gsm_train(set.x, set.y, specs[w].window, n_trees,
                                          derive_seed(seed, w), opts, workers));
    }
    return model;
}

/// Concatenated per-window representations (windows in spec order); total
/// length 900 + 196 + 36 = 1132 on 128x128 inputs.
inline std::vector<float> gsm_full_representation(const Image& img, const GsmModel& model) {
    const auto& specs = gsm_window_specs();
    if (model.forests.size() != specs.size())
        throw bad_input("grained-scanning model is incomplete");
    std::vector<float> out;
    for (std::size_t w = 0; w < specs.size(); ++w) {
        const auto part =
            gsm_representation(img, model.forests[w], specs[w].window, specs[w].stride);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

} // namespace lbpf
