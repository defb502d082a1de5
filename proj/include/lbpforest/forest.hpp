#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lbpforest/errors.hpp"
#include "lbpforest/matrix.hpp"
#include "lbpforest/parallel.hpp"
#include "lbpforest/rng.hpp"

namespace lbpf {

enum class ForestKind : std::uint8_t { random = 0, completely_random = 1 };

inline const char* to_string(ForestKind k) {
    return k == ForestKind::random ? "random" : "completely_random";
}

/// Flat node record; feature < 0 marks a leaf. Internal nodes route
/// x[feature] < threshold to `left`, everything else to `right`.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::array<double, 2> dist{0.0, 0.0};

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    const std::array<double, 2>& predict(std::span<const float> x) const {
        std::size_t i = 0;
        while (!nodes[i].is_leaf()) {
            i = double(x[std::size_t(nodes[i].feature)]) < nodes[i].threshold
                    ? std::size_t(nodes[i].left)
                    : std::size_t(nodes[i].right);
        }
        return nodes[i].dist;
    }
};

/// min_leaf = 1 and max_depth = 0 (unlimited) grow trees to purity;
/// both are exposed as speed knobs.
struct TrainOptions {
    std::size_t min_leaf = 1;
    std::size_t max_depth = 0;
};

struct Forest {
    ForestKind kind = ForestKind::random;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;
    TrainOptions options;
    std::vector<Tree> trees;

    std::size_t n_trees() const { return trees.size(); }

    std::array<double, 2> predict_proba(std::span<const float> x) const {
        if (x.size() != n_features) throw bad_input("predict_proba: dimension mismatch");
        std::array<double, 2> acc{0.0, 0.0};
        for (const auto& t : trees) {
            const auto& d = t.predict(x);
            acc[0] += d[0];
            acc[1] += d[1];
        }
        const double inv = 1.0 / double(trees.size());
        return {acc[0] * inv, acc[1] * inv};
    }
};

/// Draws the bootstrap sample for tree `tree_index` of a forest seeded with
/// `forest_seed`. Training consumes exactly this sequence first, so in-bag
/// sets can be reconstructed without storing them.
inline std::vector<std::uint32_t> bootstrap_draw(Rng& rng, std::size_t n) {
    std::vector<std::uint32_t> out(n);
    for (auto& v : out) v = std::uint32_t(rng.below(n));
    return out;
}

inline std::vector<std::uint32_t> bootstrap_indices(std::uint64_t forest_seed,
                                                    std::size_t tree_index,
                                                    std::size_t n) {
    Rng rng(derive_seed(forest_seed, tree_index));
    return bootstrap_draw(rng, n);
}

namespace detail {

inline void validate_training_input(const Matrix& x, const std::vector<int>& y) {
    if (x.rows == 0) throw degenerate_data("empty training set");
    if (x.rows != y.size()) throw bad_input("label count does not match sample count");
    if (x.rows < 2) throw degenerate_data("at least 2 samples required");
    bool has0 = false, has1 = false;
    for (int label : y) {
        if (label != 0 && label != 1) throw bad_input("labels must be 0 or 1");
        (label == 0 ? has0 : has1) = true;
    }
    if (!has0 || !has1) throw degenerate_data("single-class labels");
    for (float v : x.data)
        if (std::isnan(v)) throw bad_input("NaN feature value");
}

struct ValueLabel {
    float value;
    std::uint8_t label;
};

/// Grows one tree over the index set. Iterative (explicit work stack);
/// depth on noisy data can reach the sample count, which would overflow
/// the call stack for large patch sets.
class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const std::vector<int>& y, ForestKind kind,
                const TrainOptions& opts, Rng rng, std::vector<std::uint32_t> indices)
        : x_(x), y_(y), kind_(kind), opts_(opts), rng_(rng), idx_(std::move(indices)) {
        if (kind_ == ForestKind::random) {
            n_candidates_ = std::size_t(std::ceil(std::sqrt(double(x_.cols))));
            n_candidates_ = std::min(n_candidates_, x_.cols);
            perm_.resize(x_.cols);
            for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = std::uint32_t(i);
        }
    }

    Tree build() {
        Tree tree;
        tree.nodes.emplace_back();
        struct Task {
            std::size_t node;
            std::size_t lo, hi;
            std::size_t depth;
        };
        std::vector<Task> stack;
        stack.push_back({0, 0, idx_.size(), 0});
        while (!stack.empty()) {
            const Task t = stack.back();
            stack.pop_back();
            Split split;
            if (find_split(t.lo, t.hi, t.depth, split)) {
                const auto mid = std::partition(
                    idx_.begin() + long(t.lo), idx_.begin() + long(t.hi),
                    [&](std::uint32_t i) {
                        return double(x_.at(i, split.feature)) < split.threshold;
                    });
                const std::size_t m = std::size_t(mid - idx_.begin());
                const std::size_t left = tree.nodes.size();
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                TreeNode& node = tree.nodes[t.node];
                node.feature = std::int32_t(split.feature);
                node.threshold = split.threshold;
                node.left = std::int32_t(left);
                node.right = std::int32_t(left + 1);
                stack.push_back({left, t.lo, m, t.depth + 1});
                stack.push_back({left + 1, m, t.hi, t.depth + 1});
            } else {
                make_leaf(tree.nodes[t.node], t.lo, t.hi);
            }
        }
        return tree;
    }

private:
    struct Split {
        std::size_t feature = 0;
        double threshold = 0.0;
    };

    void make_leaf(TreeNode& node, std::size_t lo, std::size_t hi) {
        std::size_t c1 = 0;
        for (std::size_t i = lo; i < hi; ++i) c1 += std::size_t(y_[idx_[i]]);
        const double n = double(hi - lo);
        node.feature = -1;
        node.dist = {double(hi - lo - c1) / n, double(c1) / n};
    }

    bool find_split(std::size_t lo, std::size_t hi, std::size_t depth, Split& out) {
        const std::size_t n = hi - lo;
        if (n < 2 * opts_.min_leaf || n < 2) return false;
        if (opts_.max_depth > 0 && depth >= opts_.max_depth) return false;
        std::size_t c1 = 0;
        for (std::size_t i = lo; i < hi; ++i) c1 += std::size_t(y_[idx_[i]]);
        if (c1 == 0 || c1 == n) return false; // pure
        return kind_ == ForestKind::random ? find_gini_split(lo, hi, n, c1, out)
                                           : find_random_split(lo, hi, out);
    }

    // Best Gini split over ceil(sqrt(d)) candidate features, thresholds at
    // midpoints between consecutive distinct values. Candidates are
    // evaluated in ascending feature order with ascending thresholds and a
    // strict-improvement rule, so ties resolve to the lowest feature index
    // and then the lowest threshold. Accepted splits strictly reduce
    // impurity; otherwise the node becomes a leaf.
    bool find_gini_split(std::size_t lo, std::size_t hi, std::size_t n, std::size_t c1,
                         Split& out) {
        // scaled impurity: n * Gini(node) = n - (c0^2 + c1^2) / n
        const double c0 = double(n - c1);
        const double parent = double(n) - (c0 * c0 + double(c1) * double(c1)) / double(n);

        for (std::size_t i = 0; i < n_candidates_; ++i) {
            const std::size_t j = i + std::size_t(rng_.below(perm_.size() - i));
            std::swap(perm_[i], perm_[j]);
        }
        candidates_.assign(perm_.begin(), perm_.begin() + long(n_candidates_));
        std::sort(candidates_.begin(), candidates_.end());

        double best = parent - 1e-12;
        bool found = false;
        scratch_.resize(n);
        for (const std::uint32_t f : candidates_) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint32_t s = idx_[lo + i];
                scratch_[i] = {x_.at(s, f), std::uint8_t(y_[s])};
            }
            std::sort(scratch_.begin(), scratch_.end(),
                      [](const ValueLabel& a, const ValueLabel& b) { return a.value < b.value; });
            double l1 = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                l1 += scratch_[i].label;
                if (!(scratch_[i].value < scratch_[i + 1].value)) continue;
                const double nl = double(i + 1);
                const double nr = double(n - i - 1);
                if (nl < double(opts_.min_leaf) || nr < double(opts_.min_leaf)) continue;
                const double l0 = nl - l1;
                const double r1 = double(c1) - l1;
                const double r0 = nr - r1;
                const double score = (nl - (l0 * l0 + l1 * l1) / nl) +
                                     (nr - (r0 * r0 + r1 * r1) / nr);
                if (score < best) {
                    best = score;
                    out.feature = f;
                    out.threshold =
                        0.5 * (double(scratch_[i].value) + double(scratch_[i + 1].value));
                    found = true;
                }
            }
        }
        return found;
    }

    // Uniformly random feature and a threshold uniform in the feature's
    // node-local (min, max) range, no impurity criterion. Constant feature
    // draws are rejected; if a bounded number of draws all come up
    // constant, a full scan settles whether the node is constant in every
    // feature (leaf) or picks the lowest-index splittable one.
    bool find_random_split(std::size_t lo, std::size_t hi, Split& out) {
        const std::size_t max_tries = std::min<std::size_t>(x_.cols * 4, 256);
        for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
            const std::size_t f = std::size_t(rng_.below(x_.cols));
            if (try_feature(lo, hi, f, out)) return true;
        }
        for (std::size_t f = 0; f < x_.cols; ++f)
            if (try_feature(lo, hi, f, out)) return true;
        return false; // constant in all features
    }

    bool try_feature(std::size_t lo, std::size_t hi, std::size_t f, Split& out) {
        float mn = std::numeric_limits<float>::infinity();
        float mx = -std::numeric_limits<float>::infinity();
        for (std::size_t i = lo; i < hi; ++i) {
            const float v = x_.at(idx_[i], f);
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        if (!(mn < mx)) return false;
        double thr = double(mn) + rng_.real01() * (double(mx) - double(mn));
        if (!(thr > double(mn)))
            thr = std::nextafter(double(mn), std::numeric_limits<double>::infinity());
        out.feature = f;
        out.threshold = thr;
        return true;
    }

    const Matrix& x_;
    const std::vector<int>& y_;
    ForestKind kind_;
    TrainOptions opts_;
    Rng rng_;
    std::vector<std::uint32_t> idx_;
    std::size_t n_candidates_ = 0;
    std::vector<std::uint32_t> perm_;
    std::vector<std::uint32_t> candidates_;
    std::vector<ValueLabel> scratch_;
};

inline Forest train_forest(const Matrix& x, const std::vector<int>& y, ForestKind kind,
                           std::size_t n_trees, std::uint64_t seed,
                           const TrainOptions& opts, unsigned workers) {
    validate_training_input(x, y);
    if (n_trees == 0) throw bad_input("n_trees must be positive");

    Forest forest;
    forest.kind = kind;
    forest.seed = seed;
    forest.n_features = x.cols;
    forest.options = opts;
    forest.trees.resize(n_trees);

    parallel_for(n_trees, workers, [&](std::size_t t) {
        Rng rng(derive_seed(seed, t));
        std::vector<std::uint32_t> indices;
        if (kind == ForestKind::random) {
            indices = bootstrap_draw(rng, x.rows);
        } else {
            indices.resize(x.rows);
            for (std::size_t i = 0; i < x.rows; ++i) indices[i] = std::uint32_t(i);
        }
        TreeBuilder builder(x, y, kind, opts, rng, std::move(indices));
        forest.trees[t] = builder.build();
    });
    return forest;
}

} // namespace detail

/// Random forest: bootstrap per tree, ceil(sqrt(d)) candidate features per
/// node, best Gini split, growth to purity by default.
inline Forest train_random_forest(const Matrix& x, const std::vector<int>& y,
                                  std::size_t n_trees, std::uint64_t seed,
                                  const TrainOptions& opts = {}, unsigned workers = 1) {
    return detail::train_forest(x, y, ForestKind::random, n_trees, seed, opts, workers);
}

/// Completely-random forest: full sample set per tree, uniformly random
/// split feature and threshold.
inline Forest train_completely_random_forest(const Matrix& x, const std::vector<int>& y,
                                             std::size_t n_trees, std::uint64_t seed,
                                             const TrainOptions& opts = {},
                                             unsigned workers = 1) {
    return detail::train_forest(x, y, ForestKind::completely_random, n_trees, seed, opts,
                                workers);
}

/// Out-of-bag accuracy. Only defined for bootstrap-trained (random)
/// forests; in-bag sets are reconstructed from the seed derivation rule.
inline double oob_accuracy(const Forest& forest, const Matrix& x, const std::vector<int>& y) {
    if (forest.kind != ForestKind::random)
        throw bad_input("OOB accuracy requires a bootstrap-trained forest");
    if (x.rows != y.size() || x.cols != forest.n_features)
        throw bad_input("oob_accuracy: shape mismatch");

    const std::size_t n = x.rows;
    std::vector<std::array<double, 2>> acc(n, {0.0, 0.0});
    std::vector<std::uint32_t> votes(n, 0);
    std::vector<std::uint8_t> in_bag(n);
    for (std::size_t t = 0; t < forest.n_trees(); ++t) {
        std::fill(in_bag.begin(), in_bag.end(), std::uint8_t{0});
        for (const auto i : bootstrap_indices(forest.seed, t, n)) in_bag[i] = 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (in_bag[i]) continue;
            const auto& d = forest.trees[t].predict(x.row_span(i));
            acc[i][0] += d[0];
            acc[i][1] += d[1];
            ++votes[i];
        }
    }
    std::size_t correct = 0, counted = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (votes[i] == 0) continue;
        ++counted;
        const int pred = acc[i][1] > acc[i][0] ? 1 : 0;
        if (pred == y[i]) ++correct;
    }
    if (counted == 0) throw degenerate_data("no out-of-bag samples");
    return double(correct) / double(counted);
}

// Seed derivation for k-fold cross-fitting, exposed so the fold forests
// can be reproduced independently (leakage audits rely on this).
inline std::uint64_t kfold_partition_seed(std::uint64_t seed) { return derive_seed(seed, 0); }
inline std::uint64_t kfold_fold_seed(std::uint64_t seed, std::size_t fold) {
    return derive_seed(seed, 1 + fold);
}
inline std::uint64_t kfold_full_seed(std::uint64_t seed, std::size_t k) {
    return derive_seed(seed, 1 + k);
}

/// Stratified fold assignment: per-class index lists are shuffled and dealt
/// round-robin, so class proportions per fold are within one sample.
inline std::vector<int> stratified_folds(const std::vector<int>& y, std::size_t k,
                                         std::uint64_t partition_seed) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i] == 1].push_back(i);
    Rng rng(partition_seed);
    std::vector<int> fold_of(y.size(), 0);
    for (auto& cls : by_class) {
        rng.shuffle(cls);
        for (std::size_t pos = 0; pos < cls.size(); ++pos)
            fold_of[cls[pos]] = int(pos % k);
    }
    return fold_of;
}

struct KfoldVectors {
    Matrix vectors;        // n x 2 cross-fitted class probabilities
    Forest full_forest;    // trained on all samples, used at inference
    std::vector<int> fold_of;
};

/// Cross-fitted class-vector augmentation: each sample's 2-class vector
/// comes from a forest trained on the other k-1 folds; the returned full
/// forest never contributes to these vectors.
inline KfoldVectors kfold_class_vectors(const Matrix& x, const std::vector<int>& y,
                                        ForestKind kind, std::size_t n_trees, std::size_t k,
                                        std::uint64_t seed, const TrainOptions& opts = {},
                                        unsigned workers = 1) {
    detail::validate_training_input(x, y);
    if (k < 2) throw bad_input("k must be at least 2");
    if (k > x.rows) throw bad_input("k exceeds sample count");

    KfoldVectors out;
    out.fold_of = stratified_folds(y, k, kfold_partition_seed(seed));

    for (std::size_t f = 0; f < k; ++f) {
        bool has0 = false, has1 = false;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (out.fold_of[i] == int(f)) continue;
            (y[i] == 0 ? has0 : has1) = true;
        }
        if (!has0 || !has1)
            throw degenerate_data("training fold lacks a class");
    }

    out.vectors = Matrix(x.rows, 2);
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t i = 0; i < x.rows; ++i)
            (out.fold_of[i] == int(f) ? test_idx : train_idx).push_back(i);
        if (test_idx.empty()) continue;
        std::vector<int> train_y(train_idx.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) train_y[i] = y[train_idx[i]];
        const Matrix train_x = take_rows(x, train_idx);
        const Forest forest =
            detail::train_forest(train_x, train_y, kind, n_trees, kfold_fold_seed(seed, f),
                                 opts, workers);
        for (const std::size_t i : test_idx) {
            const auto p = forest.predict_proba(x.row_span(i));
            out.vectors.at(i, 0) = float(p[0]);
            out.vectors.at(i, 1) = float(p[1]);
        }
    }
    out.full_forest =
        detail::train_forest(x, y, kind, n_trees, kfold_full_seed(seed, k), opts, workers);
    return out;
}

} // namespace lbpf
