#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "lungfuse/core/matrix.hpp"

namespace lungfuse {

/// Second-order gradient boosting with logistic loss. No row or column
/// subsampling, so `seed` is recorded but does not influence the result.
struct BoostConfig {
    double learning_rate = 0.1;
    int max_depth = 5;
    int n_estimators = 100;
    double lambda = 1.0;
    double min_child_weight = 1.0;
    std::uint64_t seed = 0;
};

struct SplitInfo {
    std::size_t feature = 0;
    double threshold = 0.0;  // rows with value < threshold go left
    double gain = 0.0;
};

struct TreeNode {
    std::optional<SplitInfo> split;
    int left = -1;
    int right = -1;
    double weight = 0.0;  // leaf output before shrinkage
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const {
        int n = 0;
        while (nodes[n].split) n = row[nodes[n].split->feature] < nodes[n].split->threshold ? nodes[n].left : nodes[n].right;
        return nodes[n].weight;
    }

    bool has_split() const { return !nodes.empty() && nodes.front().split.has_value(); }
};

/// Structure score improvement of splitting (G, H) into left/right halves.
inline double split_gain(double gl, double hl, double gr, double hr, double lambda) {
    const double g = gl + gr, h = hl + hr;
    return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
}

namespace boost_detail {

struct Builder {
    const Matrix& x;
    std::span<const double> grad;
    std::span<const double> hess;
    const BoostConfig& cfg;
    RegressionTree tree;

    std::optional<SplitInfo> best_split(const std::vector<std::size_t>& rows) const {
        double g_total = 0.0, h_total = 0.0;
        for (std::size_t r : rows) {
            g_total += grad[r];
            h_total += hess[r];
        }
        std::optional<SplitInfo> best;
        std::vector<std::size_t> order(rows);
        for (std::size_t f = 0; f < x.cols; ++f) {
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
            double gl = 0.0, hl = 0.0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                gl += grad[order[i]];
                hl += hess[order[i]];
                const double v = x(order[i], f), next = x(order[i + 1], f);
                if (!(v < next)) continue;
                const double hr = h_total - hl;
                if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) continue;
                const double gain = split_gain(gl, hl, g_total - gl, hr, cfg.lambda);
                if (gain > 0.0 && (!best || gain > best->gain)) best = SplitInfo{f, 0.5 * (v + next), gain};
            }
        }
        return best;
    }

    int grow(const std::vector<std::size_t>& rows, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        double g = 0.0, h = 0.0;
        for (std::size_t r : rows) {
            g += grad[r];
            h += hess[r];
        }
        tree.nodes[id].weight = -g / (h + cfg.lambda);
        if (depth >= cfg.max_depth || rows.size() < 2) return id;
        const auto split = best_split(rows);
        if (!split) return id;
        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) (x(r, split->feature) < split->threshold ? left : right).push_back(r);
        tree.nodes[id].split = split;
        const int l = grow(left, depth + 1);
        const int rr = grow(right, depth + 1);
        tree.nodes[id].left = l;
        tree.nodes[id].right = rr;
        return id;
    }
};

}  // namespace boost_detail

/// One binary booster (positive class vs the rest).
struct BinaryBooster {
    std::vector<RegressionTree> trees;
    double learning_rate = 0.1;

    double margin(std::span<const double> row) const {
        double m = 0.0;
        for (const auto& t : trees) m += learning_rate * t.predict(row);
        return m;
    }
};

inline BinaryBooster fit_binary_booster(const Matrix& x, const std::vector<double>& target, const BoostConfig& cfg) {
    BinaryBooster model{{}, cfg.learning_rate};
    std::vector<double> margin(x.rows, 0.0), grad(x.rows), hess(x.rows);
    std::vector<std::size_t> all(x.rows);
    std::iota(all.begin(), all.end(), 0);
    for (int round = 0; round < cfg.n_estimators; ++round) {
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double p = 1.0 / (1.0 + std::exp(-margin[i]));
            grad[i] = p - target[i];
            hess[i] = p * (1.0 - p);
        }
        boost_detail::Builder b{x, grad, hess, cfg, {}};
        b.grow(all, 0);
        if (!b.tree.has_split()) break;  // nothing left to separate
        for (std::size_t i = 0; i < x.rows; ++i) margin[i] += cfg.learning_rate * b.tree.predict(x.row(i));
        model.trees.push_back(std::move(b.tree));
    }
    return model;
}

/// Summed split gain per feature with its ranking and the first split of the first tree.
struct ImportanceReport {
    std::vector<double> gains;
    std::vector<std::size_t> ranking;  // feature indices, best first
    std::optional<SplitInfo> first_split;
    std::vector<BinaryBooster> models;  // one per positive class (a single one for binary labels)
};

inline std::vector<std::size_t> rank_by_gain(const std::vector<double>& gains) {
    std::vector<std::size_t> idx(gains.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });
    return idx;
}

/// Binary labels train one booster on label == 1; more classes train one-vs-rest and sum gains.
inline ImportanceReport boosted_importance(const Matrix& x, std::span<const int> labels, const BoostConfig& cfg = {}) {
    if (labels.size() != x.rows) throw ContractError("boosted_importance: label count differs from row count");
    if (x.rows < 10) throw ContractError("boosted_importance: at least 10 rows required");
    if (cfg.max_depth < 1 || cfg.n_estimators < 1 || !(cfg.learning_rate > 0.0))
        throw ContractError("boosted_importance: invalid booster configuration");
    const std::set<int> classes(labels.begin(), labels.end());
    if (classes.size() < 2) throw DataError("boosted_importance: labels contain a single class");

    std::vector<int> positives;
    if (classes.size() == 2)
        positives.push_back(*classes.rbegin());
    else
        positives.assign(classes.begin(), classes.end());

    ImportanceReport report;
    report.gains.assign(x.cols, 0.0);
    for (int pos : positives) {
        std::vector<double> target(x.rows);
        for (std::size_t i = 0; i < x.rows; ++i) target[i] = labels[i] == pos ? 1.0 : 0.0;
        auto model = fit_binary_booster(x, target, cfg);
        for (const auto& tree : model.trees)
            for (const auto& node : tree.nodes)
                if (node.split) report.gains[node.split->feature] += node.split->gain;
        if (!report.first_split && !model.trees.empty()) report.first_split = model.trees.front().nodes.front().split;
        report.models.push_back(std::move(model));
    }
    report.ranking = rank_by_gain(report.gains);
    return report;
}

/// Indices of the top_k features by gain, best first; ties go to the lower index.
inline std::vector<std::size_t> select_features(const std::vector<double>& gains, std::size_t top_k) {
    if (top_k < 1 || top_k > gains.size())
        throw ContractError("select_features: top_k must be in [1, " + std::to_string(gains.size()) + "], got " +
                            std::to_string(top_k));
    auto ranked = rank_by_gain(gains);
    ranked.resize(top_k);
    return ranked;
}

inline std::vector<std::size_t> select_features(const ImportanceReport& r, std::size_t top_k) {
    return select_features(r.gains, top_k);
}

}  // namespace lungfuse
