#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lbpforest/errors.hpp"
#include "lbpforest/forest.hpp"
#include "lbpforest/matrix.hpp"
#include "lbpforest/rng.hpp"

namespace lbpf {

struct CascadeConfig {
    std::size_t n_rf = 4;  // Gini forests per layer
    std::size_t n_crf = 4; // completely-random forests per layer
    std::size_t n_trees = 64;
    std::size_t k = 3; // folds for cross-fitted augmentation
    std::size_t patience = 2;
    std::size_t max_layers = 12;
    std::uint64_t seed = 0;
    TrainOptions tree_options;
    unsigned workers = 1;

    std::size_t forests_per_layer() const { return n_rf + n_crf; }
    std::size_t augmentation_width() const { return forests_per_layer() * 2; }

    void validate() const {
        if (n_rf + n_crf == 0) throw bad_input("at least one forest per layer required");
        if (n_trees == 0) throw bad_input("n_trees must be positive");
        if (k < 2) throw bad_input("k must be at least 2");
        if (patience < 1) throw bad_input("patience must be at least 1");
        if (max_layers < 1) throw bad_input("max_layers must be at least 1");
    }
};

/// Layer n (1-based) consumes scale ((n-1) mod 3)+1: S1 feeds layers
/// 1,4,7,..., S2 feeds 2,5,8,..., S3 feeds 3,6,9,...
inline int scale_index_for_layer(std::size_t layer) {
    if (layer < 1) throw bad_input("layer index is 1-based");
    return int((layer - 1) % 3) + 1;
}

/// One sample's input for a layer: its scale vector with the previous
/// layer's augmentation appended. The first layer takes no augmentation.
inline std::vector<float> layer_input(std::size_t layer,
                                      const std::array<std::span<const float>, 3>& scales,
                                      std::span<const float> prev_aug = {}) {
    const int s = scale_index_for_layer(layer) - 1;
    if (scales[std::size_t(s)].empty()) throw bad_input("missing scale vector");
    if (layer == 1 && !prev_aug.empty())
        throw bad_input("first layer takes no augmentation");
    if (layer > 1 && prev_aug.empty())
        throw bad_input("layers beyond the first require augmentation");
    std::vector<float> out;
    out.reserve(scales[std::size_t(s)].size() + prev_aug.size());
    out.insert(out.end(), scales[std::size_t(s)].begin(), scales[std::size_t(s)].end());
    out.insert(out.end(), prev_aug.begin(), prev_aug.end());
    return out;
}

/// Early-stopping bookkeeping: growth stops once validation accuracy has
/// gone `patience` consecutive layers without a strict improvement, or at
/// the layer cap. Tracks the earliest best layer.
struct GrowthController {
    std::size_t patience;
    std::size_t max_layers;
    double best_accuracy = -std::numeric_limits<double>::infinity();
    std::size_t best_layer = 0; // 1-based
    std::size_t layers_seen = 0;
    std::size_t since_improvement = 0;

    GrowthController(std::size_t patience_, std::size_t max_layers_)
        : patience(patience_), max_layers(max_layers_) {}

    /// Feeds one layer's validation accuracy; returns true when growth
    /// should stop (this layer is still kept).
    bool observe(double accuracy) {
        ++layers_seen;
        if (accuracy > best_accuracy) {
            best_accuracy = accuracy;
            best_layer = layers_seen;
            since_improvement = 0;
        } else if (++since_improvement >= patience) {
            return true;
        }
        return layers_seen >= max_layers;
    }

    const char* stop_reason() const {
        return since_improvement >= patience ? "patience" : "max_layers";
    }
};

struct CascadeLayer {
    int scale_index = 1;          // 1..3
    std::vector<Forest> forests;  // RFs first, then CRFs; all-data inference forests
};

struct CascadeModel {
    CascadeConfig config;
    std::array<std::size_t, 3> scale_dims{0, 0, 0};
    std::vector<CascadeLayer> layers;
    std::size_t best_layer = 0; // 1-based; layers beyond it are kept but unused
};

/// Per-layer training evidence kept outside the model: cross-fitted
/// augmentation, fold assignments, and seeds, enough to reproduce any fold
/// forest independently and audit that no sample was predicted by a forest
/// that saw it.
struct LayerAudit {
    int scale_index = 1;
    double val_accuracy = 0.0;
    Matrix train_aug;                            // n_train x augmentation width
    std::vector<std::uint64_t> forest_seeds;     // per forest
    std::vector<std::vector<int>> fold_of;       // per forest, per train sample
};

struct CascadeTrainReport {
    std::vector<LayerAudit> layers;
    std::size_t best_layer = 0;
    std::string stop_reason;
};

/// Seed for forest `f` (0-based: RFs first) of 1-based layer `n`.
inline std::uint64_t cascade_forest_seed(std::uint64_t master, std::size_t layer,
                                         std::size_t f) {
    return derive_seed(master, layer * 64 + f);
}

namespace detail {

inline void validate_cascade_data(const std::array<Matrix, 3>& scales,
                                  const std::vector<int>& y, const char* what) {
    const std::size_t n = y.size();
    if (n == 0) throw degenerate_data(std::string(what) + " set is empty");
    for (const auto& m : scales)
        if (m.rows != n) throw bad_input(std::string(what) + " scale row count mismatch");
    bool has0 = false, has1 = false;
    for (int label : y) {
        if (label != 0 && label != 1) throw bad_input("labels must be 0 or 1");
        (label == 0 ? has0 : has1) = true;
    }
    if (!has0 || !has1) throw degenerate_data(std::string(what) + " set lacks a class");
}

} // namespace detail

/// Grows the cascade layer by layer. Each layer trains cross-fitted
/// forests on the training set (their out-of-fold class vectors become the
/// next layer's augmentation) plus all-data forests used for validation
/// scoring and inference. Growth stops per the controller; the earliest
/// best-validation layer becomes the inference depth.
inline CascadeModel train_cascade(const std::array<Matrix, 3>& train_scales,
                                  const std::vector<int>& train_y,
                                  const std::array<Matrix, 3>& val_scales,
                                  const std::vector<int>& val_y, const CascadeConfig& cfg,
                                  CascadeTrainReport* report = nullptr) {
    cfg.validate();
    detail::validate_cascade_data(train_scales, train_y, "training");
    detail::validate_cascade_data(val_scales, val_y, "validation");
    for (int s = 0; s < 3; ++s)
        if (train_scales[std::size_t(s)].cols != val_scales[std::size_t(s)].cols)
            throw bad_input("train/validation scale widths differ");

    CascadeModel model;
    model.config = cfg;
    for (int s = 0; s < 3; ++s) model.scale_dims[std::size_t(s)] = train_scales[std::size_t(s)].cols;

    const std::size_t n_forests = cfg.forests_per_layer();
    const std::size_t n_train = train_y.size();
    const std::size_t n_val = val_y.size();

    Matrix train_aug;  // cross-fitted, feeds the next layer's training input
    Matrix val_aug;    // from all-data forests, feeds the next layer's val input
    GrowthController controller(cfg.patience, cfg.max_layers);

    for (std::size_t layer = 1;; ++layer) {
        const int scale_idx = scale_index_for_layer(layer);
        const Matrix& train_scale = train_scales[std::size_t(scale_idx - 1)];
        const Matrix& val_scale = val_scales[std::size_t(scale_idx - 1)];
        const Matrix train_x = layer == 1 ? train_scale : hconcat(train_scale, train_aug);
        const Matrix val_x = layer == 1 ? val_scale : hconcat(val_scale, val_aug);

        CascadeLayer out_layer;
        out_layer.scale_index = scale_idx;
        LayerAudit audit;
        audit.scale_index = scale_idx;
        Matrix next_train_aug(n_train, cfg.augmentation_width());
        Matrix next_val_aug(n_val, cfg.augmentation_width());
        std::vector<std::array<double, 2>> val_sum(n_val, {0.0, 0.0});

        for (std::size_t f = 0; f < n_forests; ++f) {
            const ForestKind kind =
                f < cfg.n_rf ? ForestKind::random : ForestKind::completely_random;
            const std::uint64_t forest_seed = cascade_forest_seed(cfg.seed, layer, f);
            KfoldVectors kv = kfold_class_vectors(train_x, train_y, kind, cfg.n_trees, cfg.k,
                                                  forest_seed, cfg.tree_options, cfg.workers);
            for (std::size_t i = 0; i < n_train; ++i) {
                next_train_aug.at(i, f * 2) = kv.vectors.at(i, 0);
                next_train_aug.at(i, f * 2 + 1) = kv.vectors.at(i, 1);
            }
            for (std::size_t i = 0; i < n_val; ++i) {
                const auto p = kv.full_forest.predict_proba(val_x.row_span(i));
                next_val_aug.at(i, f * 2) = float(p[0]);
                next_val_aug.at(i, f * 2 + 1) = float(p[1]);
                val_sum[i][0] += p[0];
                val_sum[i][1] += p[1];
            }
            audit.forest_seeds.push_back(forest_seed);
            audit.fold_of.push_back(kv.fold_of);
            out_layer.forests.push_back(std::move(kv.full_forest));
        }

        std::size_t correct = 0;
        for (std::size_t i = 0; i < n_val; ++i) {
            const int pred = val_sum[i][1] > val_sum[i][0] ? 1 : 0;
            if (pred == val_y[i]) ++correct;
        }
        const double val_accuracy = double(correct) / double(n_val);

        model.layers.push_back(std::move(out_layer));
        if (report) {
            audit.val_accuracy = val_accuracy;
            audit.train_aug = next_train_aug;
            report->layers.push_back(std::move(audit));
        }

        if (controller.observe(val_accuracy)) break;
        train_aug = std::move(next_train_aug);
        val_aug = std::move(next_val_aug);
    }

    model.best_layer = controller.best_layer;
    if (report) {
        report->best_layer = controller.best_layer;
        report->stop_reason = controller.stop_reason();
    }
    return model;
}

/// Spoof probability for one sample: walks layers up to the best one,
/// rebuilding the augmentation exactly as at training time, and averages
/// the best layer's spoof outputs. Pure; the model is never mutated.
inline double predict_score(const CascadeModel& model,
                            const std::array<std::span<const float>, 3>& scales) {
    if (model.layers.empty() || model.best_layer == 0)
        throw bad_input("cascade model is untrained");
    for (int s = 0; s < 3; ++s)
        if (scales[std::size_t(s)].size() != model.scale_dims[std::size_t(s)])
            throw bad_input("scale vector length does not match the trained model");

    std::vector<float> aug;
    for (std::size_t layer = 1; layer <= model.best_layer; ++layer) {
        const CascadeLayer& L = model.layers[layer - 1];
        const std::vector<float> x = layer_input(layer, scales, aug);
        std::vector<float> next_aug;
        next_aug.reserve(L.forests.size() * 2);
        double spoof_sum = 0.0;
        for (const Forest& f : L.forests) {
            const auto p = f.predict_proba(x);
            next_aug.push_back(float(p[0]));
            next_aug.push_back(float(p[1]));
            spoof_sum += p[1];
        }
        if (layer == model.best_layer) return spoof_sum / double(L.forests.size());
        aug = std::move(next_aug);
    }
    throw bad_input("unreachable: best_layer exceeded layer walk");
}

inline std::vector<double> predict_scores(const CascadeModel& model,
                                          const std::array<Matrix, 3>& scales) {
    const std::size_t n = scales[0].rows;
    for (const auto& m : scales)
        if (m.rows != n) throw bad_input("scale row count mismatch");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = predict_score(
            model, {scales[0].row_span(i), scales[1].row_span(i), scales[2].row_span(i)});
    }
    return out;
}

} // namespace lbpf
