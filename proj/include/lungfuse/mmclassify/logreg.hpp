#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "lungfuse/core/error.hpp"
#include "lungfuse/core/hash.hpp"
#include "lungfuse/core/matrix.hpp"

namespace lungfuse {

namespace classify_detail {

inline int count_classes(std::span<const int> labels) {
    int c = 0;
    for (int l : labels) {
        if (l < 0) throw ContractError("classifier: negative label");
        c = std::max(c, l + 1);
    }
    return c;
}

/// In-place softmax with max subtraction.
inline void softmax(std::span<double> z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        s += v;
    }
    for (double& v : z) v /= s;
}

inline int argmax(std::span<const double> p) {
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace classify_detail

/// Multinomial logistic regression. params = W (classes x features, row-major) followed by b (classes).
struct LogRegModel {
    std::size_t n_features = 0;
    int n_classes = 0;
    std::vector<double> params;

    std::size_t bias_offset() const { return static_cast<std::size_t>(n_classes) * n_features; }

    std::vector<double> predict_proba(std::span<const double> row) const {
        if (row.size() != n_features) throw ContractError("LogRegModel: feature width mismatch");
        std::vector<double> z(static_cast<std::size_t>(n_classes));
        for (int c = 0; c < n_classes; ++c) {
            double s = params[bias_offset() + static_cast<std::size_t>(c)];
            const double* w = params.data() + static_cast<std::size_t>(c) * n_features;
            for (std::size_t j = 0; j < n_features; ++j) s += w[j] * row[j];
            z[static_cast<std::size_t>(c)] = s;
        }
        classify_detail::softmax(z);
        return z;
    }

    int predict(std::span<const double> row) const { return classify_detail::argmax(predict_proba(row)); }

    std::vector<int> predict(const Matrix& x) const {
        std::vector<int> out(x.rows);
        for (std::size_t r = 0; r < x.rows; ++r) out[r] = predict(x.row(r));
        return out;
    }

    std::uint64_t digest() const { return Fnv1a().text("logreg").f64s(params).value(); }
};

/// Mean cross-entropy over all rows; gradient written into `grad` (resized to match params).
inline double logreg_loss_grad(const LogRegModel& m, const Matrix& x, std::span<const int> labels,
                               std::vector<double>& grad) {
    if (x.rows != labels.size()) throw ContractError("logreg: label count differs from row count");
    grad.assign(m.params.size(), 0.0);
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) {
        auto p = m.predict_proba(x.row(r));
        const auto y = static_cast<std::size_t>(labels[r]);
        loss -= std::log(std::max(p[y], 1e-300));
        p[y] -= 1.0;
        for (int c = 0; c < m.n_classes; ++c) {
            const double d = p[static_cast<std::size_t>(c)] * inv_n;
            double* g = grad.data() + static_cast<std::size_t>(c) * m.n_features;
            for (std::size_t j = 0; j < m.n_features; ++j) g[j] += d * x(r, j);
            grad[m.bias_offset() + static_cast<std::size_t>(c)] += d;
        }
    }
    return loss * inv_n;
}

/// Zero-initialized full-batch gradient descent. The seed is accepted for interface symmetry with
/// the MLP; the procedure itself draws no random numbers.
inline LogRegModel train_logreg(const Matrix& x, std::span<const int> labels, double lr = 0.1, int epochs = 200,
                                std::uint64_t seed = 0, int n_classes = 0) {
    (void)seed;
    if (x.rows == 0) throw DataError("train_logreg: empty training set");
    if (!(lr > 0.0) || epochs < 0) throw ContractError("train_logreg: lr must be > 0 and epochs >= 0");
    LogRegModel m;
    m.n_features = x.cols;
    m.n_classes = std::max(n_classes, classify_detail::count_classes(labels));
    if (m.n_classes < 2) throw DataError("train_logreg: at least two classes required");
    m.params.assign(static_cast<std::size_t>(m.n_classes) * (x.cols + 1), 0.0);
    std::vector<double> grad;
    for (int e = 0; e < epochs; ++e) {
        logreg_loss_grad(m, x, labels, grad);
        for (std::size_t i = 0; i < grad.size(); ++i) m.params[i] -= lr * grad[i];
    }
    return m;
}

}  // namespace lungfuse
