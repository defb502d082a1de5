#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "lbpforest/eval.hpp"
#include "oracles.hpp"

using lbpf::ScoredSample;

namespace {

std::vector<ScoredSample> make_samples(const std::vector<double>& genuine,
                                       const std::vector<double>& spoof) {
    std::vector<ScoredSample> out;
    for (double s : genuine) out.push_back({s, lbpf::kGenuine, ""});
    for (double s : spoof) out.push_back({s, lbpf::kSpoof, ""});
    return out;
}

std::vector<ScoredSample> random_samples(lbpf::Rng& rng, std::size_t n_genuine,
                                         std::size_t n_spoof, int quantize) {
    std::vector<ScoredSample> out;
    const auto draw = [&]() {
        double s = rng.real01();
        if (quantize > 0) s = std::floor(s * quantize) / quantize; // force ties
        return s;
    };
    for (std::size_t i = 0; i < n_genuine; ++i) out.push_back({draw(), lbpf::kGenuine, ""});
    for (std::size_t i = 0; i < n_spoof; ++i) out.push_back({draw(), lbpf::kSpoof, ""});
    return out;
}

} // namespace

TEST_CASE("equal error rate: frozen worked example") {
    const auto samples = make_samples({0.1, 0.4, 0.35, 0.8}, {0.3, 0.6, 0.7, 0.9});
    const auto r = lbpf::eer(samples);
    CHECK(r.eer == 0.25);       // exact tie at the 0.6 threshold
    CHECK(r.threshold == 0.6);
}

TEST_CASE("equal error rate: perfectly separated scores") {
    const auto samples = make_samples({0.0, 0.1, 0.2}, {0.8, 0.9, 1.0});
    const auto r = lbpf::eer(samples);
    CHECK(r.eer == 0.0);
    CHECK(r.threshold > 0.2);
    CHECK(r.threshold <= 0.8);
}

TEST_CASE("equal error rate: indistinguishable scores give exactly one half") {
    const auto samples = make_samples({0.5, 0.5, 0.5}, {0.5, 0.5, 0.5});
    const auto r = lbpf::eer(samples);
    CHECK(r.eer == 0.5);

    // anti-learned scores (polarity reversed) push past one half
    const auto reversed = make_samples({0.9, 0.8}, {0.1, 0.2});
    CHECK(lbpf::eer(reversed).eer >= 0.5);
}

TEST_CASE("equal error rate: agreement with the longhand sweep") {
    lbpf::Rng rng(515);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t ng = 1 + rng.below(40);
        const std::size_t ns = 1 + rng.below(40);
        const int quantize = trial % 3 == 0 ? 8 : (trial % 3 == 1 ? 0 : 3);
        const auto samples = random_samples(rng, ng, ns, quantize);
        const auto got = lbpf::eer(samples);
        const auto want = oracle::eer(samples);
        REQUIRE_THAT(got.eer, Catch::Matchers::WithinAbs(want.eer, 1e-12));
        REQUIRE_THAT(got.threshold, Catch::Matchers::WithinAbs(want.threshold, 1e-12));
        REQUIRE(got.eer >= 0.0);
        REQUIRE(got.eer <= 1.0);
    }
}

TEST_CASE("equal error rate: invariant under monotone score transforms") {
    lbpf::Rng rng(616);
    for (int trial = 0; trial < 20; ++trial) {
        const auto samples = random_samples(rng, 25, 25, trial % 2 == 0 ? 0 : 6);
        auto cubed = samples;
        for (auto& s : cubed) s.score = s.score * s.score * s.score;
        REQUIRE_THAT(lbpf::eer(cubed).eer,
                     Catch::Matchers::WithinAbs(lbpf::eer(samples).eer, 1e-12));
    }
}

TEST_CASE("equal error rate: symmetric under score reflection with label swap") {
    lbpf::Rng rng(717);
    for (int trial = 0; trial < 20; ++trial) {
        const auto samples = random_samples(rng, 20, 30, 0);
        std::vector<ScoredSample> mirrored;
        for (const auto& s : samples)
            mirrored.push_back({1.0 - s.score, 1 - s.label, ""});
        // reflection maps "spoof scores high" onto the same geometry; with
        // continuous (tie-free) scores the strict/non-strict boundary's
        // measure is zero, so rates agree to interpolation accuracy
        REQUIRE_THAT(lbpf::eer(mirrored).eer,
                     Catch::Matchers::WithinAbs(lbpf::eer(samples).eer, 1e-9));
    }
}

TEST_CASE("error-rate curve: operational definitions and shape") {
    lbpf::Rng rng(818);
    const auto samples = random_samples(rng, 30, 30, 5);
    const auto curve = lbpf::far_frr_curve(samples);

    std::vector<double> genuine, spoof;
    for (const auto& s : samples)
        (s.label == lbpf::kGenuine ? genuine : spoof).push_back(s.score);

    REQUIRE(curve.thresholds.size() == curve.far.size());
    REQUIRE(curve.thresholds.size() == curve.frr.size());
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
        const double t = curve.thresholds[i];
        std::size_t fa = 0, fr = 0;
        for (double s : spoof) fa += s < t;
        for (double s : genuine) fr += s >= t;
        REQUIRE(curve.far[i] == double(fa) / double(spoof.size()));
        REQUIRE(curve.frr[i] == double(fr) / double(genuine.size()));
        if (i > 0) {
            REQUIRE(curve.thresholds[i] > curve.thresholds[i - 1]);
            REQUIRE(curve.far[i] >= curve.far[i - 1]);  // FAR rises with the threshold
            REQUIRE(curve.frr[i] <= curve.frr[i - 1]);  // FRR falls
        }
    }
    CHECK(curve.far.front() == 0.0); // lowest threshold accepts nothing as genuine
    CHECK(curve.far.back() == 1.0);  // sentinel past the max accepts everything
    CHECK(curve.frr.back() == 0.0);
}

TEST_CASE("error rates: single-class inputs are degenerate") {
    const auto genuine_only = make_samples({0.2, 0.3}, {});
    CHECK_THROWS_AS(lbpf::eer(genuine_only), lbpf::degenerate_data);
    const auto spoof_only = make_samples({}, {0.2, 0.3});
    CHECK_THROWS_AS(lbpf::far_frr_curve(spoof_only), lbpf::degenerate_data);

    auto bad = make_samples({0.1}, {0.9});
    bad[0].label = 7;
    CHECK_THROWS_AS(lbpf::eer(bad), lbpf::bad_input);
}

TEST_CASE("half total error rate") {
    const auto dev = make_samples({0.1, 0.4, 0.35, 0.8}, {0.3, 0.6, 0.7, 0.9});
    // at the dev threshold 0.6: test FAR = 1/2 (0.5 < 0.6), FRR = 1/3 (0.7)
    const auto test = make_samples({0.2, 0.3, 0.7}, {0.5, 0.95});
    const double h = lbpf::hter(dev, test);
    CHECK_THAT(h, Catch::Matchers::WithinAbs(0.5 * (0.5 + 1.0 / 3.0), 1e-15));
    CHECK(h == lbpf::hter_at(test, 0.6));
    CHECK(h == oracle::hter_at(test, 0.6));

    // HTER on the dev set itself at its own EER threshold equals the EER
    // when the crossing is exact
    CHECK_THAT(lbpf::hter(dev, dev), Catch::Matchers::WithinAbs(0.25, 1e-15));

    lbpf::Rng rng(919);
    const auto r1 = random_samples(rng, 25, 25, 4);
    const auto r2 = random_samples(rng, 25, 25, 4);
    CHECK(lbpf::hter(r1, r2) == oracle::hter_at(r2, lbpf::eer(r1).threshold));
}

TEST_CASE("group aggregation: means, order, and label consistency") {
    std::vector<ScoredSample> frames{
        {0.2, 0, "vidA"}, {0.9, 1, "vidB"}, {0.4, 0, "vidA"},
        {0.5, 0, ""},     {0.7, 1, "vidB"}, {0.6, 0, "vidA"},
    };
    const auto out = lbpf::aggregate_by_group(frames);
    REQUIRE(out.size() == 3);
    CHECK(out[0].group == "vidA"); // first appearance order
    CHECK_THAT(out[0].score, Catch::Matchers::WithinAbs((0.2 + 0.4 + 0.6) / 3.0, 1e-15));
    CHECK(out[0].label == 0);
    CHECK(out[1].group == "vidB");
    CHECK_THAT(out[1].score, Catch::Matchers::WithinAbs(0.8, 1e-15));
    CHECK(out[2].group.empty()); // ungrouped frame stays a singleton
    CHECK(out[2].score == 0.5);

    frames.push_back({0.1, 1, "vidA"}); // genuine group polluted with a spoof frame
    CHECK_THROWS_AS(lbpf::aggregate_by_group(frames), lbpf::bad_input);
}

TEST_CASE("subject-disjoint folds") {
    // 12 subjects x 8 samples; subjects alternate between mostly-genuine
    // and mostly-spoof material
    std::vector<std::string> subjects;
    std::vector<int> labels;
    for (int s = 0; s < 12; ++s) {
        for (int i = 0; i < 8; ++i) {
            subjects.push_back("subj" + std::to_string(s));
            labels.push_back(i < (s % 2 == 0 ? 6 : 2) ? lbpf::kGenuine : lbpf::kSpoof);
        }
    }
    const auto fold = lbpf::kfold_split(subjects, labels, 5, 31);
    REQUIRE(fold.size() == subjects.size());

    SECTION("every sample of a subject lands in one fold") {
        std::map<std::string, std::set<int>> seen;
        for (std::size_t i = 0; i < fold.size(); ++i) {
            REQUIRE(fold[i] >= 0);
            REQUIRE(fold[i] < 5);
            seen[subjects[i]].insert(fold[i]);
        }
        for (const auto& [id, folds] : seen) REQUIRE(folds.size() == 1);
    }

    SECTION("folds are populated and roughly class balanced") {
        std::map<int, std::pair<int, int>> load;
        for (std::size_t i = 0; i < fold.size(); ++i)
            (labels[i] == lbpf::kGenuine ? load[fold[i]].first : load[fold[i]].second)++;
        REQUIRE(load.size() == 5);
        for (const auto& [f, gs] : load) {
            CHECK(gs.first >= 4);  // 48 genuine over 5 folds, greedy balance
            CHECK(gs.second >= 4); // 48 spoof likewise
        }
    }

    SECTION("deterministic in the seed") {
        CHECK(lbpf::kfold_split(subjects, labels, 5, 31) == fold);
        CHECK(lbpf::kfold_split(subjects, labels, 5, 32) != fold);
    }

    SECTION("input validation") {
        CHECK_THROWS_AS(lbpf::kfold_split(subjects, labels, 1, 31), lbpf::bad_input);
        CHECK_THROWS_AS(lbpf::kfold_split(subjects, labels, 13, 31), lbpf::bad_input);
        std::vector<std::string> two{"a", "a", "b", "b"};
        std::vector<int> twoy{0, 1, 0, 1};
        CHECK_THROWS_AS(lbpf::kfold_split(two, twoy, 3, 31), lbpf::bad_input);
        std::vector<std::string> blank{"a", ""};
        std::vector<int> blanky{0, 1};
        CHECK_THROWS_AS(lbpf::kfold_split(blank, blanky, 2, 31), lbpf::bad_input);
        std::vector<int> short_labels{0};
        CHECK_THROWS_AS(lbpf::kfold_split(two, short_labels, 2, 31), lbpf::bad_input);
    }
}

TEST_CASE("score evaluation report") {
    std::vector<ScoredSample> frames;
    lbpf::Rng rng(2121);
    for (int g = 0; g < 20; ++g) {
        const int label = g % 2;
        const std::string group = "clip" + std::to_string(g);
        for (int i = 0; i < 3; ++i) {
            const double base = label == 0 ? 0.2 : 0.8;
            frames.push_back({base + rng.real(-0.15, 0.15), label, group});
        }
    }

    const auto frame_report = lbpf::evaluate_scores(frames, "frame");
    CHECK(frame_report.n_genuine == 30);
    CHECK(frame_report.n_spoof == 30);
    CHECK(frame_report.aggregation == "frame");
    CHECK(frame_report.eer == oracle::eer(frames).eer);
    CHECK(frame_report.hter == oracle::hter_at(frames, frame_report.eer_threshold));

    const auto mean_report = lbpf::evaluate_scores(frames, "mean");
    CHECK(mean_report.n_genuine == 10);
    CHECK(mean_report.n_spoof == 10);
    CHECK(mean_report.eer == oracle::eer(lbpf::aggregate_by_group(frames)).eer);

    CHECK_THROWS_AS(lbpf::evaluate_scores(frames, "median"), lbpf::bad_input);

    SECTION("fold statistics and text rendering") {
        auto report = frame_report;
        report.folds = {{0, 0.10, 0.12}, {1, 0.20, 0.22}, {2, 0.30, 0.32}};
        lbpf::fill_fold_stats(report);
        CHECK_THAT(report.eer_mean, Catch::Matchers::WithinAbs(0.2, 1e-15));
        CHECK_THAT(report.eer_std, Catch::Matchers::WithinAbs(0.1, 1e-12));
        CHECK_THAT(report.hter_mean, Catch::Matchers::WithinAbs(0.22, 1e-15));

        const std::string text = lbpf::format_report_text(report);
        CHECK(text.find("EER") != std::string::npos);
        CHECK(text.find("HTER") != std::string::npos);
        CHECK(text.find("fold") != std::string::npos);
        CHECK(text.find("+/-") != std::string::npos);
        const std::string flat = lbpf::format_report_text(frame_report);
        CHECK(flat.find("fold") == std::string::npos);
    }
}
