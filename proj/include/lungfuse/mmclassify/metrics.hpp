#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lungfuse/core/error.hpp"

namespace lungfuse {

/// counts[t * n + p] = rows of true class t predicted as p.
struct ConfusionMatrix {
    std::size_t n_classes = 0;
    std::vector<std::size_t> counts;

    explicit ConfusionMatrix(std::size_t n = 2) : n_classes(n), counts(n * n, 0) {}

    std::size_t& at(std::size_t truth, std::size_t pred) { return counts[truth * n_classes + pred]; }
    std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * n_classes + pred]; }

    void add(int truth, int pred) { ++at(static_cast<std::size_t>(truth), static_cast<std::size_t>(pred)); }

    std::size_t total() const {
        std::size_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }

    std::size_t row_sum(std::size_t truth) const {
        std::size_t s = 0;
        for (std::size_t p = 0; p < n_classes; ++p) s += at(truth, p);
        return s;
    }

    std::size_t col_sum(std::size_t pred) const {
        std::size_t s = 0;
        for (std::size_t t = 0; t < n_classes; ++t) s += at(t, pred);
        return s;
    }

    ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
        if (o.n_classes != n_classes) throw ContractError("ConfusionMatrix: class count mismatch");
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
        return *this;
    }

    /// Binary layout from TP/FP/FN/TN with class 1 as the positive class.
    static ConfusionMatrix binary(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
        ConfusionMatrix cm(2);
        cm.at(1, 1) = tp;
        cm.at(0, 1) = fp;
        cm.at(1, 0) = fn;
        cm.at(0, 0) = tn;
        return cm;
    }
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Precision/recall/F1 treating `cls` as positive. Empty denominators give 0.
inline ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t cls) {
    const double tp = static_cast<double>(cm.at(cls, cls));
    const double predicted = static_cast<double>(cm.col_sum(cls));
    const double actual = static_cast<double>(cm.row_sum(cls));
    ClassMetrics m;
    m.precision = predicted > 0 ? tp / predicted : 0.0;
    m.recall = actual > 0 ? tp / actual : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

/// Accuracy plus macro-averaged precision, recall and F1 (macro F1 is the mean of per-class F1).
struct Scores {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<ClassMetrics> per_class;
};

inline Scores score(const ConfusionMatrix& cm) {
    Scores s;
    const double total = static_cast<double>(cm.total());
    double trace = 0.0;
    for (std::size_t c = 0; c < cm.n_classes; ++c) trace += static_cast<double>(cm.at(c, c));
    s.accuracy = total > 0 ? trace / total : 0.0;
    for (std::size_t c = 0; c < cm.n_classes; ++c) {
        const auto m = class_metrics(cm, c);
        s.per_class.push_back(m);
        s.precision += m.precision;
        s.recall += m.recall;
        s.f1 += m.f1;
    }
    const double n = static_cast<double>(cm.n_classes);
    s.precision /= n;
    s.recall /= n;
    s.f1 /= n;
    return s;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1)
};

inline MeanStd mean_std(std::span<const double> v) {
    MeanStd r;
    if (v.empty()) return r;
    for (double x : v) r.mean += x;
    r.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - r.mean) * (x - r.mean);
        r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return r;
}

}  // namespace lungfuse
