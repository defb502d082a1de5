#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lbpforest/cascade.hpp"
#include "lbpforest/config.hpp"
#include "lbpforest/errors.hpp"
#include "lbpforest/eval.hpp"
#include "lbpforest/feature_cache.hpp"
#include "lbpforest/features.hpp"
#include "lbpforest/hash.hpp"
#include "lbpforest/image.hpp"
#include "lbpforest/image_io.hpp"
#include "lbpforest/manifest.hpp"
#include "lbpforest/parallel.hpp"

namespace lbpf {

/// Decode, resize to the pipeline's 128x128 working size, and convert to
/// the configured color space.
inline Image load_input_image(const std::filesystem::path& path, ColorSpace space) {
    Image img = load_image(path);
    if (img.width != kInputSize || img.height != kInputSize)
        img = resize_bilinear(img, kInputSize, kInputSize);
    return convert_color_space(img, space);
}

inline std::uint64_t manifest_file_hash(const std::filesystem::path& file) {
    const auto bytes = detail::read_file_bytes(file);
    return fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

/// Multi-scale features for every manifest record, parallel across rows.
/// Row order equals record order.
inline FeatureCache extract_features(const DatasetManifest& manifest, const RunConfig& config,
                                     std::uint64_t manifest_hash) {
    if (manifest.size() == 0) throw degenerate_data("manifest has no records");
    FeatureCache cache;
    cache.space = config.color_space;
    cache.manifest_hash = manifest_hash;
    cache.config_json = run_config_text(config);
    for (int s = 0; s < 3; ++s)
        cache.scales[std::size_t(s)] =
            Matrix(manifest.size(), scale_length(ScaleId(s)));

    parallel_for(manifest.size(), config.effective_workers(), [&](std::size_t i) {
        const Image img = load_input_image(manifest.resolve(i), config.color_space);
        const auto vecs = extract_all_scales(img);
        for (int s = 0; s < 3; ++s)
            std::copy(vecs[std::size_t(s)].begin(), vecs[std::size_t(s)].end(),
                      cache.scales[std::size_t(s)].row(i));
    });
    return cache;
}

/// The three per-scale matrices restricted to the given cache rows.
inline std::array<Matrix, 3> cache_rows(const FeatureCache& cache,
                                        std::span<const std::size_t> rows) {
    std::array<Matrix, 3> out;
    for (int s = 0; s < 3; ++s) out[std::size_t(s)] = take_rows(cache.scales[std::size_t(s)], rows);
    return out;
}

struct TrainValSplit {
    std::vector<std::size_t> train; // positions into the caller's row list
    std::vector<std::size_t> val;
};

/// Carves a validation set (about 1/5) out of a training set for cascade
/// growth control. Subject-disjoint whenever more than one subject exists;
/// retries a few derived seeds until both sides hold both classes.
inline TrainValSplit validation_split(std::span<const std::string> subjects,
                                      std::span<const int> labels, std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (n != subjects.size()) throw bad_input("subject/label count mismatch");
    if (n < 4) throw degenerate_data("too few samples to carve a validation set");

    std::set<std::string> distinct(subjects.begin(), subjects.end());

    for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
        const std::uint64_t s = derive_seed(seed, 0xA11 + attempt);
        std::vector<int> fold;
        if (distinct.size() >= 2) {
            const std::size_t k = std::min<std::size_t>(5, distinct.size());
            fold = kfold_split(subjects, labels, k, s);
        } else {
            // single subject: subject-disjoint carving is impossible;
            // fall back to a stratified per-sample split
            std::vector<int> y(labels.begin(), labels.end());
            fold = stratified_folds(y, 5, s);
        }
        TrainValSplit split;
        for (std::size_t i = 0; i < n; ++i)
            (fold[i] == 0 ? split.val : split.train).push_back(i);
        int seen[2][2] = {{0, 0}, {0, 0}};
        for (const auto i : split.train) seen[0][labels[i]] = 1;
        for (const auto i : split.val) seen[1][labels[i]] = 1;
        if (seen[0][0] && seen[0][1] && seen[1][0] && seen[1][1]) return split;
    }
    throw degenerate_data("could not carve a two-class validation split");
}

struct TrainedCascade {
    CascadeModel model;
    CascadeTrainReport report;
    std::vector<std::size_t> train_rows; // cache rows used for fitting
    std::vector<std::size_t> val_rows;   // cache rows used for growth control
};

/// Trains the cascade on the given cache rows, carving the validation
/// split internally.
inline TrainedCascade train_cascade_on_rows(const FeatureCache& cache,
                                            const DatasetManifest& manifest,
                                            std::span<const std::size_t> rows,
                                            const RunConfig& config) {
    std::vector<std::string> subjects(rows.size());
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        subjects[i] = manifest.records[rows[i]].subject;
        labels[i] = manifest.records[rows[i]].label;
    }
    const TrainValSplit split = validation_split(subjects, labels, config.seed);

    TrainedCascade out;
    std::vector<int> train_y, val_y;
    for (const auto i : split.train) {
        out.train_rows.push_back(rows[i]);
        train_y.push_back(labels[i]);
    }
    for (const auto i : split.val) {
        out.val_rows.push_back(rows[i]);
        val_y.push_back(labels[i]);
    }

    const auto train_scales = cache_rows(cache, out.train_rows);
    const auto val_scales = cache_rows(cache, out.val_rows);
    out.model = train_cascade(train_scales, train_y, val_scales, val_y,
                              config.cascade_config(), &out.report);
    return out;
}

/// Scores cache rows through a trained cascade; labels and groups come
/// from the manifest.
inline std::vector<ScoredSample> score_rows(const CascadeModel& model,
                                            const FeatureCache& cache,
                                            const DatasetManifest& manifest,
                                            std::span<const std::size_t> rows,
                                            unsigned workers = 1) {
    std::vector<ScoredSample> out(rows.size());
    parallel_for(rows.size(), workers, [&](std::size_t i) {
        const std::size_t r = rows[i];
        const double score = predict_score(
            model, {cache.scales[0].row_span(r), cache.scales[1].row_span(r),
                    cache.scales[2].row_span(r)});
        out[i] = {score, manifest.records[r].label, manifest.records[r].group};
    });
    return out;
}

/// Rows belonging to a fold id from the manifest's fold column; when the
/// manifest carries no folds, every row qualifies regardless of `fold`.
inline std::vector<std::size_t> rows_with_fold(const DatasetManifest& manifest, int fold) {
    std::vector<std::size_t> rows;
    const bool has = manifest.has_folds();
    for (std::size_t i = 0; i < manifest.size(); ++i)
        if (!has || manifest.records[i].fold == fold) rows.push_back(i);
    return rows;
}

inline std::vector<std::size_t> all_rows_of(const DatasetManifest& manifest) {
    std::vector<std::size_t> rows(manifest.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
}

// ---------------------------------------------------------------------------
// Grained-scanning baseline: patch forests feed a cascade over the three
// per-window representations, mirroring the main pipeline's structure.

struct GsmPipelineModel {
    GsmModel scanner;
    CascadeModel cascade;
};

/// Per-window representation matrices for a set of manifest rows.
inline std::array<Matrix, 3> gsm_representations(const GsmModel& scanner,
                                                 const DatasetManifest& manifest,
                                                 std::span<const std::size_t> rows,
                                                 ColorSpace space, unsigned workers) {
    const auto& specs = gsm_window_specs();
    std::array<Matrix, 3> out;
    for (std::size_t w = 0; w < specs.size(); ++w)
        out[w] = Matrix(rows.size(), gsm_length(specs[w]));
    parallel_for(rows.size(), workers, [&](std::size_t i) {
        const Image img = load_input_image(manifest.resolve(rows[i]), space);
        for (std::size_t w = 0; w < specs.size(); ++w) {
            const auto rep =
                gsm_representation(img, scanner.forests[w], specs[w].window, specs[w].stride);
            std::copy(rep.begin(), rep.end(), out[w].row(i));
        }
    });
    return out;
}

/// Trains the scanning forests and the cascade that consumes them. The
/// same train/validation carving as the main pipeline; patch trees use a
/// min-leaf floor to keep their size bounded on large patch sets.
inline GsmPipelineModel train_gsm_pipeline(const DatasetManifest& manifest,
                                           std::span<const std::size_t> rows,
                                           const RunConfig& config) {
    std::vector<std::string> subjects(rows.size());
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        subjects[i] = manifest.records[rows[i]].subject;
        labels[i] = manifest.records[rows[i]].label;
    }
    const TrainValSplit split = validation_split(subjects, labels, config.seed);

    std::vector<Image> train_images;
    std::vector<int> train_y;
    std::vector<std::size_t> train_rows, val_rows;
    std::vector<int> val_y;
    for (const auto i : split.train) {
        train_rows.push_back(rows[i]);
        train_y.push_back(labels[i]);
    }
    for (const auto i : split.val) {
        val_rows.push_back(rows[i]);
        val_y.push_back(labels[i]);
    }
    train_images.reserve(train_rows.size());
    for (const auto r : train_rows)
        train_images.push_back(load_input_image(manifest.resolve(r), config.color_space));

    GsmPipelineModel out;
    TrainOptions patch_opts;
    patch_opts.min_leaf = 10;
    out.scanner =
        gsm_train_all(train_images, train_y, config.n_trees, derive_seed(config.seed, 0x65),
                      config.gsm_max_patches, patch_opts, config.effective_workers());
    train_images.clear();
    train_images.shrink_to_fit();

    const auto train_scales = gsm_representations(out.scanner, manifest, train_rows,
                                                  config.color_space,
                                                  config.effective_workers());
    const auto val_scales = gsm_representations(out.scanner, manifest, val_rows,
                                                config.color_space,
                                                config.effective_workers());
    CascadeConfig cc = config.cascade_config();
    cc.seed = derive_seed(config.seed, 0x66);
    out.cascade = train_cascade(train_scales, train_y, val_scales, val_y, cc);
    return out;
}

inline std::vector<ScoredSample> score_gsm_rows(const GsmPipelineModel& model,
                                                const DatasetManifest& manifest,
                                                std::span<const std::size_t> rows,
                                                ColorSpace space, unsigned workers = 1) {
    const auto scales = gsm_representations(model.scanner, manifest, rows, space, workers);
    std::vector<ScoredSample> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double score = predict_score(
            model.cascade,
            {scales[0].row_span(i), scales[1].row_span(i), scales[2].row_span(i)});
        out[i] = {score, manifest.records[rows[i]].label, manifest.records[rows[i]].group};
    }
    return out;
}

// ---------------------------------------------------------------------------
// Protocol drivers.

/// Holdout: trains on fold-0 rows, tests on fold-1 rows (all rows play
/// both parts when the manifest has no fold column — reported EER is then
/// apparent error, not generalization).
struct HoldoutRun {
    TrainedCascade trained;
    EvalReport report;
    std::vector<ScoredSample> test_scores;
};

inline HoldoutRun run_holdout(const FeatureCache& cache, const DatasetManifest& manifest,
                              const RunConfig& config) {
    HoldoutRun run;
    run.trained = train_cascade_on_rows(cache, manifest, rows_with_fold(manifest, 0), config);
    const auto test = rows_with_fold(manifest, 1);
    run.test_scores =
        score_rows(run.trained.model, cache, manifest, test, config.effective_workers());
    run.report = evaluate_scores(run.test_scores, config.aggregate);
    return run;
}

/// Five-fold subject-disjoint cross-validation: per fold, trains on the
/// other folds and tests on it. Per-fold EER is computed on the fold's own
/// scores; per-fold HTER applies the fold's internal-validation threshold.
/// The headline numbers are the across-fold means.
inline EvalReport run_kfold5(const FeatureCache& cache, const DatasetManifest& manifest,
                             const RunConfig& config) {
    const auto subjects = manifest.subjects();
    const auto labels = manifest.labels();
    const auto fold_of = kfold_split(subjects, labels, 5, config.seed);

    EvalReport report;
    report.aggregation = config.aggregate;
    std::vector<ScoredSample> pooled;
    for (int f = 0; f < 5; ++f) {
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < manifest.size(); ++i)
            (fold_of[i] == f ? test_rows : train_rows).push_back(i);

        RunConfig fold_config = config;
        fold_config.seed = derive_seed(config.seed, 0xF0 + std::size_t(f));
        const TrainedCascade trained =
            train_cascade_on_rows(cache, manifest, train_rows, fold_config);

        const auto test_scores = score_rows(trained.model, cache, manifest, test_rows,
                                            config.effective_workers());
        const auto val_scores = score_rows(trained.model, cache, manifest, trained.val_rows,
                                           config.effective_workers());
        auto test_used = test_scores;
        auto val_used = val_scores;
        if (config.aggregate == "mean") {
            test_used = aggregate_by_group(test_used);
            val_used = aggregate_by_group(val_used);
        }

        FoldStat stat;
        stat.fold = f;
        stat.eer = eer(test_used).eer;
        stat.hter = hter(val_used, test_used);
        report.folds.push_back(stat);
        pooled.insert(pooled.end(), test_scores.begin(), test_scores.end());
    }

    fill_fold_stats(report);
    const auto pooled_report = evaluate_scores(pooled, config.aggregate);
    report.n_genuine = pooled_report.n_genuine;
    report.n_spoof = pooled_report.n_spoof;
    report.curve = pooled_report.curve;
    report.eer = report.eer_mean;
    report.eer_threshold = pooled_report.eer_threshold;
    report.hter = report.hter_mean;
    return report;
}

/// Full report as JSON, provenance included: the run settings, an input
/// hash, the scalar rates, per-fold rows, and the complete FAR/FRR curve.
inline nlohmann::json report_to_json(const EvalReport& r, const RunConfig& config,
                                     std::uint64_t inputs_hash) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.folds)
        folds.push_back({{"fold", f.fold}, {"eer", f.eer}, {"hter", f.hter}});
    nlohmann::json j{{"run_config", to_json(config)},
                     {"inputs_hash", inputs_hash},
                     {"aggregation", r.aggregation},
                     {"n_genuine", r.n_genuine},
                     {"n_spoof", r.n_spoof},
                     {"eer", r.eer},
                     {"eer_threshold", r.eer_threshold},
                     {"hter", r.hter},
                     {"curve",
                      {{"thresholds", r.curve.thresholds},
                       {"far", r.curve.far},
                       {"frr", r.curve.frr}}}};
    if (!r.folds.empty()) {
        j["folds"] = std::move(folds);
        j["eer_mean"] = r.eer_mean;
        j["eer_std"] = r.eer_std;
        j["hter_mean"] = r.hter_mean;
        j["hter_std"] = r.hter_std;
    }
    return j;
}

} // namespace lbpf
