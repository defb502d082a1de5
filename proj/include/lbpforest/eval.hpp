#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lbpforest/errors.hpp"
#include "lbpforest/rng.hpp"

namespace lbpf {

inline constexpr int kGenuine = 0;
inline constexpr int kSpoof = 1;

/// Score polarity is fixed across the toolkit: higher = more likely spoof.
struct ScoredSample {
    double score = 0.0;
    int label = kGenuine;
    std::string group; // optional video/clip key for aggregation
};

struct FarFrrCurve {
    std::vector<double> thresholds;
    std::vector<double> far; // fraction of spoof scoring below the threshold
    std::vector<double> frr; // fraction of genuine scoring at/above it
};

namespace detail {

inline void split_scores(std::span<const ScoredSample> samples, std::vector<double>& genuine,
                         std::vector<double>& spoof) {
    genuine.clear();
    spoof.clear();
    for (const auto& s : samples) {
        if (s.label != kGenuine && s.label != kSpoof) throw bad_input("label must be 0 or 1");
        (s.label == kGenuine ? genuine : spoof).push_back(s.score);
    }
    if (genuine.empty() || spoof.empty())
        throw degenerate_data("both classes required for error rates");
}

} // namespace detail

/// A sample is accepted as genuine when its score falls below the
/// threshold, so FAR counts spoof scores < t and FRR genuine scores >= t.
inline double far_at(std::span<const double> spoof_scores, double threshold) {
    std::size_t n = 0;
    for (double s : spoof_scores) n += s < threshold;
    return double(n) / double(spoof_scores.size());
}

inline double frr_at(std::span<const double> genuine_scores, double threshold) {
    std::size_t n = 0;
    for (double s : genuine_scores) n += s >= threshold;
    return double(n) / double(genuine_scores.size());
}

/// Both rates at every distinct score plus one sentinel past the maximum,
/// so the sweep always reaches FAR = 1, FRR = 0.
inline FarFrrCurve far_frr_curve(std::span<const ScoredSample> samples) {
    std::vector<double> genuine, spoof;
    detail::split_scores(samples, genuine, spoof);

    std::vector<double> thr;
    thr.reserve(samples.size() + 1);
    for (const auto& s : samples) thr.push_back(s.score);
    std::sort(thr.begin(), thr.end());
    thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
    thr.push_back(thr.back() + 1.0);

    FarFrrCurve curve;
    curve.thresholds = std::move(thr);
    curve.far.reserve(curve.thresholds.size());
    curve.frr.reserve(curve.thresholds.size());
    for (double t : curve.thresholds) {
        curve.far.push_back(far_at(spoof, t));
        curve.frr.push_back(frr_at(genuine, t));
    }
    return curve;
}

struct EerResult {
    double eer = 0.0;
    double threshold = 0.0;
};

/// Equal error rate with linear interpolation at the FAR/FRR crossing.
/// Walking the curve, FAR rises from 0 and FRR falls to 0, so the first
/// index where FAR >= FRR brackets the crossing; an exact tie is returned
/// as-is, otherwise both rates are interpolated between that index and the
/// previous one.
inline EerResult eer(std::span<const ScoredSample> samples) {
    const FarFrrCurve c = far_frr_curve(samples);
    for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
        if (c.far[i] < c.frr[i]) continue;
        if (c.far[i] == c.frr[i] || i == 0)
            return {c.far[i], c.thresholds[i]};
        const double gap_before = c.frr[i - 1] - c.far[i - 1]; // > 0
        const double gap_after = c.far[i] - c.frr[i];          // > 0 here
        const double alpha = gap_before / (gap_before + gap_after);
        return {c.far[i - 1] + alpha * (c.far[i] - c.far[i - 1]),
                c.thresholds[i - 1] + alpha * (c.thresholds[i] - c.thresholds[i - 1])};
    }
    throw bad_input("error-rate sweep found no crossing"); // unreachable: sentinel ends at FAR=1, FRR=0
}

/// Half total error rate on `test` at the threshold fixed by the dev set's
/// equal-error point.
inline double hter(std::span<const ScoredSample> dev, std::span<const ScoredSample> test) {
    const double threshold = eer(dev).threshold;
    std::vector<double> genuine, spoof;
    detail::split_scores(test, genuine, spoof);
    return 0.5 * (far_at(spoof, threshold) + frr_at(genuine, threshold));
}

inline double hter_at(std::span<const ScoredSample> test, double threshold) {
    std::vector<double> genuine, spoof;
    detail::split_scores(test, genuine, spoof);
    return 0.5 * (far_at(spoof, threshold) + frr_at(genuine, threshold));
}

/// Collapses frames into their groups by mean score; a group's frames must
/// agree on the label. Samples with an empty group key stay singletons.
/// Output order is first appearance.
inline std::vector<ScoredSample> aggregate_by_group(std::span<const ScoredSample> frames) {
    struct Acc {
        double sum = 0.0;
        std::size_t n = 0;
        int label = 0;
        std::size_t order = 0;
    };
    std::map<std::string, Acc> groups;
    std::vector<ScoredSample> out; // slot per output sample, in appearance order
    for (const auto& f : frames) {
        if (f.group.empty()) {
            out.push_back(f);
            continue;
        }
        auto [it, inserted] = groups.try_emplace(f.group);
        if (inserted) {
            it->second.label = f.label;
            it->second.order = out.size();
            out.push_back({0.0, f.label, f.group});
        } else if (it->second.label != f.label) {
            throw bad_input("group '" + f.group + "' mixes labels");
        }
        it->second.sum += f.score;
        it->second.n += 1;
    }
    for (const auto& [key, acc] : groups) out[acc.order].score = acc.sum / double(acc.n);
    return out;
}

/// Subject-disjoint, approximately class-balanced k folds. Subjects are
/// shuffled (tie order), sorted by weight, then greedily placed on the fold
/// where they least unbalance the per-class totals.
inline std::vector<int> kfold_split(std::span<const std::string> subjects,
                                    std::span<const int> labels, std::size_t k,
                                    std::uint64_t seed) {
    if (subjects.size() != labels.size()) throw bad_input("subject/label count mismatch");
    if (k < 2) throw bad_input("k must be at least 2");

    struct Subj {
        std::string id;
        std::size_t genuine = 0;
        std::size_t spoof = 0;
    };
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        if (subjects[i].empty()) throw bad_input("empty subject id");
        auto& c = counts[subjects[i]];
        (labels[i] == kGenuine ? c.first : c.second) += 1;
    }
    if (counts.size() < k) throw bad_input("fewer subjects than folds");

    std::vector<Subj> subj;
    subj.reserve(counts.size());
    for (const auto& [id, c] : counts) subj.push_back({id, c.first, c.second});

    std::vector<std::size_t> order(subj.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return subj[a].genuine + subj[a].spoof > subj[b].genuine + subj[b].spoof;
    });

    std::vector<std::pair<double, double>> fold_load(k, {0.0, 0.0});
    std::map<std::string, int> fold_of_subject;
    for (const std::size_t s : order) {
        const double g = double(subj[s].genuine), sp = double(subj[s].spoof);
        std::size_t best = 0;
        double best_cost = std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < k; ++f) {
            const double ng = fold_load[f].first + g;
            const double ns = fold_load[f].second + sp;
            const double cost = ng * ng + ns * ns;
            if (cost < best_cost) {
                best_cost = cost;
                best = f;
            }
        }
        fold_load[best].first += g;
        fold_load[best].second += sp;
        fold_of_subject[subj[s].id] = int(best);
    }

    std::vector<int> fold(subjects.size());
    for (std::size_t i = 0; i < subjects.size(); ++i)
        fold[i] = fold_of_subject.at(subjects[i]);
    return fold;
}

struct FoldStat {
    int fold = 0;
    double eer = 0.0;
    double hter = 0.0;
};

struct EvalReport {
    double eer = 0.0;
    double eer_threshold = 0.0;
    double hter = 0.0;
    FarFrrCurve curve;
    std::size_t n_genuine = 0;
    std::size_t n_spoof = 0;
    std::string aggregation = "frame";
    std::vector<FoldStat> folds; // filled in k-fold protocol runs
    double eer_mean = 0.0, eer_std = 0.0;
    double hter_mean = 0.0, hter_std = 0.0;
};

inline EvalReport evaluate_scores(std::span<const ScoredSample> samples,
                                  const std::string& aggregation = "frame") {
    std::vector<ScoredSample> used(samples.begin(), samples.end());
    if (aggregation == "mean")
        used = aggregate_by_group(used);
    else if (aggregation != "frame")
        throw bad_input("aggregation must be 'frame' or 'mean'");

    EvalReport report;
    report.aggregation = aggregation;
    for (const auto& s : used) (s.label == kGenuine ? report.n_genuine : report.n_spoof) += 1;
    const EerResult e = eer(used);
    report.eer = e.eer;
    report.eer_threshold = e.threshold;
    report.hter = hter_at(used, e.threshold);
    report.curve = far_frr_curve(used);
    return report;
}

inline void fill_fold_stats(EvalReport& report) {
    const std::size_t n = report.folds.size();
    if (n == 0) return;
    double es = 0.0, hs = 0.0;
    for (const auto& f : report.folds) {
        es += f.eer;
        hs += f.hter;
    }
    report.eer_mean = es / double(n);
    report.hter_mean = hs / double(n);
    double ev = 0.0, hv = 0.0;
    for (const auto& f : report.folds) {
        ev += (f.eer - report.eer_mean) * (f.eer - report.eer_mean);
        hv += (f.hter - report.hter_mean) * (f.hter - report.hter_mean);
    }
    report.eer_std = n > 1 ? std::sqrt(ev / double(n - 1)) : 0.0;
    report.hter_std = n > 1 ? std::sqrt(hv / double(n - 1)) : 0.0;
}

/// Plain-text table: percentages, one row per fold when folds exist.
inline std::string format_report_text(const EvalReport& r) {
    char line[160];
    std::string out;
    std::snprintf(line, sizeof(line), "samples     genuine %zu  spoof %zu  (%s-level)\n",
                  r.n_genuine, r.n_spoof, r.aggregation.c_str());
    out += line;
    std::snprintf(line, sizeof(line), "EER         %.3f%%  @ threshold %.6f\n", 100.0 * r.eer,
                  r.eer_threshold);
    out += line;
    std::snprintf(line, sizeof(line), "HTER        %.3f%%\n", 100.0 * r.hter);
    out += line;
    if (!r.folds.empty()) {
        out += "fold   EER%     HTER%\n";
        for (const auto& f : r.folds) {
            std::snprintf(line, sizeof(line), "%-6d %-8.3f %-8.3f\n", f.fold, 100.0 * f.eer,
                          100.0 * f.hter);
            out += line;
        }
        std::snprintf(line, sizeof(line), "mean   %.3f +/- %.3f   %.3f +/- %.3f\n",
                      100.0 * r.eer_mean, 100.0 * r.eer_std, 100.0 * r.hter_mean,
                      100.0 * r.hter_std);
        out += line;
    }
    return out;
}

} // namespace lbpf
