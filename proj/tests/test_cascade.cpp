#include <catch_amalgamated.hpp>

#include <array>
#include <vector>

#include "lbpforest/cascade.hpp"
#include "oracles.hpp"

using lbpf::CascadeConfig;
using lbpf::CascadeModel;
using lbpf::CascadeTrainReport;
using lbpf::ForestKind;
using lbpf::Matrix;

namespace {

struct MultiScale {
    std::array<Matrix, 3> scales;
    std::vector<int> y;
};

/// Three synthetic "scale" matrices over one label sequence; every scale
/// separates the classes on its own.
MultiScale make_multiscale(std::size_t n, std::uint64_t seed) {
    const std::size_t dims[3] = {12, 9, 6};
    lbpf::Rng rng(seed);
    MultiScale out;
    out.y.resize(n);
    for (int s = 0; s < 3; ++s) out.scales[std::size_t(s)] = Matrix(n, dims[s]);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = int(i % 2);
        out.y[i] = label;
        const double center = label == 1 ? 1.0 : -1.0;
        for (int s = 0; s < 3; ++s)
            for (std::size_t j = 0; j < dims[s]; ++j)
                out.scales[std::size_t(s)].at(i, j) = float(center + 0.5 * rng.normal());
    }
    return out;
}

CascadeConfig small_config(std::uint64_t seed) {
    CascadeConfig cfg;
    cfg.n_trees = 8;
    cfg.k = 3;
    cfg.patience = 2;
    cfg.max_layers = 4;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("cascade: layer schedule cycles through the scales") {
    const int want[9] = {1, 2, 3, 1, 2, 3, 1, 2, 3};
    for (std::size_t layer = 1; layer <= 9; ++layer)
        CHECK(lbpf::scale_index_for_layer(layer) == want[layer - 1]);
    CHECK_THROWS_AS(lbpf::scale_index_for_layer(0), lbpf::bad_input);
}

TEST_CASE("cascade: layer input lengths at full feature size") {
    const std::vector<float> s1(8673), s2(35721), s3(81585);
    const std::vector<float> aug(16);
    const std::array<std::span<const float>, 3> scales{s1, s2, s3};

    CHECK(lbpf::layer_input(1, scales).size() == 8673);
    CHECK(lbpf::layer_input(2, scales, aug).size() == 35721 + 16);
    CHECK(lbpf::layer_input(3, scales, aug).size() == 81585 + 16);
    CHECK(lbpf::layer_input(4, scales, aug).size() == 8689);

    // augmentation is appended after the scale block
    std::vector<float> tiny1{1.0f, 2.0f};
    std::vector<float> tiny2{3.0f};
    std::vector<float> tiny3{4.0f};
    std::vector<float> a{0.25f, 0.75f};
    const std::array<std::span<const float>, 3> tiny{tiny1, tiny2, tiny3};
    const auto x = lbpf::layer_input(4, tiny, a);
    REQUIRE(x == std::vector<float>{1.0f, 2.0f, 0.25f, 0.75f});

    CHECK_THROWS_AS(lbpf::layer_input(1, scales, aug), lbpf::bad_input);
    CHECK_THROWS_AS(lbpf::layer_input(2, scales), lbpf::bad_input);
    const std::array<std::span<const float>, 3> missing{s1, {}, s3};
    CHECK_THROWS_AS(lbpf::layer_input(2, missing, aug), lbpf::bad_input);
}

TEST_CASE("cascade: growth controller traces") {
    SECTION("stall after an early peak stops on patience") {
        lbpf::GrowthController c(2, 12);
        CHECK(!c.observe(0.80));
        CHECK(!c.observe(0.90));
        CHECK(!c.observe(0.90)); // tie is not an improvement
        CHECK(c.observe(0.90));  // second stall layer: stop
        CHECK(c.best_layer == 2);
        CHECK(std::string(c.stop_reason()) == "patience");
    }
    SECTION("steady improvement runs to the layer cap") {
        lbpf::GrowthController c(2, 5);
        for (int i = 1; i <= 4; ++i) CHECK(!c.observe(0.1 * i));
        CHECK(c.observe(0.5));
        CHECK(c.best_layer == 5);
        CHECK(std::string(c.stop_reason()) == "max_layers");
    }
    SECTION("patience one stops at the first stall") {
        lbpf::GrowthController c(1, 12);
        CHECK(!c.observe(0.7));
        CHECK(c.observe(0.7));
        CHECK(c.best_layer == 1);
    }
    SECTION("ties keep the earliest best layer") {
        lbpf::GrowthController c(3, 12);
        c.observe(0.9);
        c.observe(0.9);
        c.observe(0.9);
        CHECK(c.best_layer == 1);
    }
}

TEST_CASE("cascade: config validation") {
    CascadeConfig cfg = small_config(1);
    cfg.k = 1;
    CHECK_THROWS_AS(cfg.validate(), lbpf::bad_input);
    cfg = small_config(1);
    cfg.patience = 0;
    CHECK_THROWS_AS(cfg.validate(), lbpf::bad_input);
    cfg = small_config(1);
    cfg.max_layers = 0;
    CHECK_THROWS_AS(cfg.validate(), lbpf::bad_input);
    cfg = small_config(1);
    cfg.n_rf = 0;
    cfg.n_crf = 0;
    CHECK_THROWS_AS(cfg.validate(), lbpf::bad_input);
    cfg = small_config(1);
    cfg.n_trees = 0;
    CHECK_THROWS_AS(cfg.validate(), lbpf::bad_input);
    CHECK(small_config(1).augmentation_width() == 16);
}

TEST_CASE("cascade: training, prediction, and audits") {
    const MultiScale train = make_multiscale(60, 3001);
    const MultiScale val = make_multiscale(30, 3002);
    const CascadeConfig cfg = small_config(55);

    CascadeTrainReport report;
    const CascadeModel model =
        lbpf::train_cascade(train.scales, train.y, val.scales, val.y, cfg, &report);

    SECTION("shape of the grown cascade") {
        REQUIRE(!model.layers.empty());
        REQUIRE(model.layers.size() <= cfg.max_layers);
        REQUIRE(model.best_layer >= 1);
        REQUIRE(model.best_layer <= model.layers.size());
        CHECK(model.scale_dims == std::array<std::size_t, 3>{12, 9, 6});
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            const auto& layer = model.layers[l];
            CHECK(layer.scale_index == lbpf::scale_index_for_layer(l + 1));
            REQUIRE(layer.forests.size() == 8);
            for (std::size_t f = 0; f < 8; ++f) {
                CHECK(layer.forests[f].kind ==
                      (f < 4 ? ForestKind::random : ForestKind::completely_random));
                // inference forests are the all-data member of the k-fold set
                CHECK(layer.forests[f].seed ==
                      lbpf::kfold_full_seed(lbpf::cascade_forest_seed(cfg.seed, l + 1, f),
                                            cfg.k));
            }
        }
    }

    SECTION("training report mirrors the model and replays the controller") {
        REQUIRE(report.layers.size() == model.layers.size());
        REQUIRE(report.best_layer == model.best_layer);
        lbpf::GrowthController replay(cfg.patience, cfg.max_layers);
        for (const auto& audit : report.layers) {
            REQUIRE(audit.val_accuracy >= 0.0);
            REQUIRE(audit.val_accuracy <= 1.0);
            replay.observe(audit.val_accuracy);
        }
        CHECK(replay.best_layer == report.best_layer);
        CHECK(std::string(replay.stop_reason()) == report.stop_reason);

        for (const auto& audit : report.layers) {
            REQUIRE(audit.train_aug.rows == 60);
            REQUIRE(audit.train_aug.cols == 16);
            for (std::size_t i = 0; i < 60; ++i)
                for (std::size_t f = 0; f < 8; ++f)
                    REQUIRE_THAT(double(audit.train_aug.at(i, 2 * f)) +
                                     double(audit.train_aug.at(i, 2 * f + 1)),
                                 Catch::Matchers::WithinAbs(1.0, 1e-6));
        }
    }

    SECTION("scores separate the classes and stay in range") {
        const auto scores = lbpf::predict_scores(model, train.scales);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            REQUIRE(scores[i] >= 0.0);
            REQUIRE(scores[i] <= 1.0);
            correct += (scores[i] > 0.5 ? 1 : 0) == train.y[i];
        }
        CHECK(double(correct) / double(scores.size()) > 0.9);

        const auto val_scores = lbpf::predict_scores(model, val.scales);
        std::size_t vc = 0;
        for (std::size_t i = 0; i < val_scores.size(); ++i)
            vc += (val_scores[i] > 0.5 ? 1 : 0) == val.y[i];
        CHECK(double(vc) / double(val_scores.size()) > 0.85);
    }

    SECTION("prediction is pure and deterministic") {
        const std::array<std::span<const float>, 3> first{train.scales[0].row_span(0),
                                                          train.scales[1].row_span(0),
                                                          train.scales[2].row_span(0)};
        const double once = lbpf::predict_score(model, first);
        const double twice = lbpf::predict_score(model, first);
        CHECK(once == twice);
    }

    SECTION("retraining with the same config reproduces every score") {
        const CascadeModel again =
            lbpf::train_cascade(train.scales, train.y, val.scales, val.y, cfg);
        REQUIRE(again.layers.size() == model.layers.size());
        REQUIRE(again.best_layer == model.best_layer);
        CHECK(lbpf::predict_scores(again, val.scales) ==
              lbpf::predict_scores(model, val.scales));

        CascadeConfig parallel = cfg;
        parallel.workers = 3; // worker count must not leak into the model
        const CascadeModel par =
            lbpf::train_cascade(train.scales, train.y, val.scales, val.y, parallel);
        CHECK(lbpf::predict_scores(par, val.scales) ==
              lbpf::predict_scores(model, val.scales));

        CascadeConfig reseeded = cfg;
        reseeded.seed = 56;
        const CascadeModel other =
            lbpf::train_cascade(train.scales, train.y, val.scales, val.y, reseeded);
        CHECK(lbpf::predict_scores(other, val.scales) !=
              lbpf::predict_scores(model, val.scales));
    }

    SECTION("leakage audit: held-out augmentation rows match fold retraining") {
        // layer 1 trains straight on scale 1; later layers append the
        // previous audit's augmentation. Check one Gini and one random
        // forest per audited layer.
        const std::size_t audit_layers = std::min<std::size_t>(2, report.layers.size());
        for (std::size_t l = 0; l < audit_layers; ++l) {
            const Matrix train_x =
                l == 0 ? train.scales[0]
                       : lbpf::hconcat(train.scales[std::size_t(
                                           lbpf::scale_index_for_layer(l + 1) - 1)],
                                       report.layers[l - 1].train_aug);
            for (const std::size_t f : {std::size_t(0), std::size_t(5)}) {
                const auto& audit = report.layers[l];
                REQUIRE(audit.forest_seeds[f] ==
                        lbpf::cascade_forest_seed(cfg.seed, l + 1, f));
                const auto& fold_of = audit.fold_of[f];
                REQUIRE(fold_of ==
                        lbpf::stratified_folds(
                            train.y, cfg.k,
                            lbpf::kfold_partition_seed(audit.forest_seeds[f])));
                for (std::size_t fold = 0; fold < cfg.k; ++fold) {
                    std::vector<std::size_t> rows;
                    std::vector<int> ys;
                    for (std::size_t i = 0; i < 60; ++i) {
                        if (fold_of[i] == int(fold)) continue;
                        rows.push_back(i);
                        ys.push_back(train.y[i]);
                    }
                    const Matrix sub = lbpf::take_rows(train_x, rows);
                    const std::uint64_t fs =
                        lbpf::kfold_fold_seed(audit.forest_seeds[f], fold);
                    const lbpf::Forest redo =
                        f < cfg.n_rf
                            ? lbpf::train_random_forest(sub, ys, cfg.n_trees, fs)
                            : lbpf::train_completely_random_forest(sub, ys, cfg.n_trees,
                                                                   fs);
                    for (std::size_t i = 0; i < 60; ++i) {
                        if (fold_of[i] != int(fold)) continue;
                        const auto p = redo.predict_proba(train_x.row_span(i));
                        REQUIRE(audit.train_aug.at(i, 2 * f) == float(p[0]));
                        REQUIRE(audit.train_aug.at(i, 2 * f + 1) == float(p[1]));
                    }
                }
            }
        }
    }

    SECTION("prediction input validation") {
        std::vector<float> short_s1(11), s2(9), s3(6);
        CHECK_THROWS_AS(
            lbpf::predict_score(model, {short_s1, s2, s3}), lbpf::bad_input);
        const CascadeModel blank;
        std::vector<float> a(12), b(9), c(6);
        CHECK_THROWS_AS(lbpf::predict_score(blank, {a, b, c}), lbpf::bad_input);
    }
}

TEST_CASE("cascade: malformed training sets") {
    const MultiScale train = make_multiscale(24, 777);
    const MultiScale val = make_multiscale(12, 778);
    const CascadeConfig cfg = small_config(5);

    SECTION("row count mismatch between scales") {
        auto broken = train.scales;
        broken[1] = Matrix(23, 9);
        CHECK_THROWS_AS(lbpf::train_cascade(broken, train.y, val.scales, val.y, cfg),
                        lbpf::bad_input);
    }
    SECTION("train/val width mismatch") {
        auto broken = val.scales;
        broken[2] = Matrix(12, 7);
        CHECK_THROWS_AS(lbpf::train_cascade(train.scales, train.y, broken, val.y, cfg),
                        lbpf::bad_input);
    }
    SECTION("single-class validation set") {
        std::vector<int> ones(val.y.size(), 1);
        CHECK_THROWS_AS(lbpf::train_cascade(train.scales, train.y, val.scales, ones, cfg),
                        lbpf::degenerate_data);
    }
    SECTION("empty training set") {
        std::array<Matrix, 3> empty{Matrix(0, 12), Matrix(0, 9), Matrix(0, 6)};
        CHECK_THROWS_AS(lbpf::train_cascade(empty, {}, val.scales, val.y, cfg),
                        lbpf::degenerate_data);
    }
}
