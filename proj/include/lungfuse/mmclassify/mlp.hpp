#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "lungfuse/core/adam.hpp"
#include "lungfuse/core/rng.hpp"
#include "lungfuse/denoise/train.hpp"
#include "lungfuse/mmclassify/logreg.hpp"

namespace lungfuse {

struct MLPSpec {
    int hidden1 = 32;
    int hidden2 = 16;
    double dropout = 0.5;  // applied to the first hidden layer during training only

    void validate() const {
        if (hidden1 < 1 || hidden2 < 1) throw ContractError("MLPSpec: hidden sizes must be >= 1");
        if (!(dropout >= 0.0 && dropout < 1.0)) throw ContractError("MLPSpec: dropout must be in [0, 1)");
    }
};

/// input -> hidden1 (relu, dropout) -> hidden2 (relu) -> softmax.
/// params: W1 (h1 x in), b1, W2 (h2 x h1), b2, W3 (classes x h2), b3, each weight block row-major.
struct MLPModel {
    MLPSpec spec;
    std::size_t n_features = 0;
    int n_classes = 0;
    std::vector<double> params;

    struct Offsets {
        std::size_t w1, b1, w2, b2, w3, b3, total;
    };

    Offsets offsets() const {
        const auto in = n_features, h1 = static_cast<std::size_t>(spec.hidden1),
                   h2 = static_cast<std::size_t>(spec.hidden2), c = static_cast<std::size_t>(n_classes);
        Offsets o{};
        o.w1 = 0;
        o.b1 = o.w1 + h1 * in;
        o.w2 = o.b1 + h1;
        o.b2 = o.w2 + h2 * h1;
        o.w3 = o.b2 + h2;
        o.b3 = o.w3 + c * h2;
        o.total = o.b3 + c;
        return o;
    }

    std::vector<double> predict_proba(std::span<const double> row) const;

    int predict(std::span<const double> row) const { return classify_detail::argmax(predict_proba(row)); }

    std::vector<int> predict(const Matrix& x) const {
        std::vector<int> out(x.rows);
        for (std::size_t r = 0; r < x.rows; ++r) out[r] = predict(x.row(r));
        return out;
    }

    std::uint64_t digest() const { return Fnv1a().text("mlp").f64s(params).value(); }
};

namespace mlp_detail {

struct Activations {
    std::vector<double> a1, a2, p;  // post-activation hidden layers and class probabilities
};

/// mask: per-unit multiplier for hidden1 (0 or 1/(1-p)); empty means no dropout.
inline Activations forward(const MLPModel& m, std::span<const double> x, std::span<const double> mask) {
    const auto o = m.offsets();
    const auto h1 = static_cast<std::size_t>(m.spec.hidden1), h2 = static_cast<std::size_t>(m.spec.hidden2),
               c = static_cast<std::size_t>(m.n_classes);
    const double* p = m.params.data();
    Activations a;
    a.a1.resize(h1);
    for (std::size_t i = 0; i < h1; ++i) {
        double s = p[o.b1 + i];
        const double* w = p + o.w1 + i * m.n_features;
        for (std::size_t j = 0; j < m.n_features; ++j) s += w[j] * x[j];
        s = s > 0.0 ? s : 0.0;
        a.a1[i] = mask.empty() ? s : s * mask[i];
    }
    a.a2.resize(h2);
    for (std::size_t i = 0; i < h2; ++i) {
        double s = p[o.b2 + i];
        const double* w = p + o.w2 + i * h1;
        for (std::size_t j = 0; j < h1; ++j) s += w[j] * a.a1[j];
        a.a2[i] = s > 0.0 ? s : 0.0;
    }
    a.p.resize(c);
    for (std::size_t i = 0; i < c; ++i) {
        double s = p[o.b3 + i];
        const double* w = p + o.w3 + i * h2;
        for (std::size_t j = 0; j < h2; ++j) s += w[j] * a.a2[j];
        a.p[i] = s;
    }
    classify_detail::softmax(a.p);
    return a;
}

}  // namespace mlp_detail

inline std::vector<double> MLPModel::predict_proba(std::span<const double> row) const {
    if (row.size() != n_features) throw ContractError("MLPModel: feature width mismatch");
    return mlp_detail::forward(*this, row, {}).p;
}

inline MLPModel init_mlp(std::size_t n_features, int n_classes, const MLPSpec& spec, std::uint64_t seed) {
    spec.validate();
    MLPModel m{spec, n_features, n_classes, {}};
    const auto o = m.offsets();
    m.params.assign(o.total, 0.0);
    Rng rng(Fnv1a().text("lungfuse-mlp-init").u64(seed).value());
    auto glorot = [&](std::size_t off, std::size_t fan_out, std::size_t fan_in) {
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t i = 0; i < fan_out * fan_in; ++i) m.params[off + i] = rng.uniform(-a, a);
    };
    glorot(o.w1, static_cast<std::size_t>(spec.hidden1), n_features);
    glorot(o.w2, static_cast<std::size_t>(spec.hidden2), static_cast<std::size_t>(spec.hidden1));
    glorot(o.w3, static_cast<std::size_t>(n_classes), static_cast<std::size_t>(spec.hidden2));
    return m;
}

/// Mean cross-entropy over `rows` and its gradient. masks, when non-empty, holds one hidden1 mask per
/// entry of `rows` (concatenated).
inline double mlp_loss_grad(const MLPModel& m, const Matrix& x, std::span<const int> labels,
                            std::span<const std::size_t> rows, std::span<const double> masks,
                            std::vector<double>& grad) {
    const auto o = m.offsets();
    const auto h1 = static_cast<std::size_t>(m.spec.hidden1), h2 = static_cast<std::size_t>(m.spec.hidden2),
               c = static_cast<std::size_t>(m.n_classes);
    if (!masks.empty() && masks.size() != rows.size() * h1) throw ContractError("mlp_loss_grad: mask size mismatch");
    grad.assign(o.total, 0.0);
    const double* p = m.params.data();
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    double loss = 0.0;
    std::vector<double> d3(c), d2(h2), d1(h1);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::size_t r = rows[k];
        auto xr = x.row(r);
        std::span<const double> mask = masks.empty() ? std::span<const double>{} : masks.subspan(k * h1, h1);
        const auto a = mlp_detail::forward(m, xr, mask);
        const auto y = static_cast<std::size_t>(labels[r]);
        loss -= std::log(std::max(a.p[y], 1e-300));
        for (std::size_t i = 0; i < c; ++i) d3[i] = (a.p[i] - (i == y ? 1.0 : 0.0)) * inv_n;
        for (std::size_t i = 0; i < c; ++i) {
            grad[o.b3 + i] += d3[i];
            for (std::size_t j = 0; j < h2; ++j) grad[o.w3 + i * h2 + j] += d3[i] * a.a2[j];
        }
        for (std::size_t j = 0; j < h2; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < c; ++i) s += d3[i] * p[o.w3 + i * h2 + j];
            d2[j] = a.a2[j] > 0.0 ? s : 0.0;
        }
        for (std::size_t i = 0; i < h2; ++i) {
            grad[o.b2 + i] += d2[i];
            for (std::size_t j = 0; j < h1; ++j) grad[o.w2 + i * h1 + j] += d2[i] * a.a1[j];
        }
        for (std::size_t j = 0; j < h1; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < h2; ++i) s += d2[i] * p[o.w2 + i * h1 + j];
            // a1 = relu(z) * mask, so d/dz = mask where z > 0; a1 > 0 iff z > 0 and mask > 0
            const double mk = mask.empty() ? 1.0 : mask[j];
            d1[j] = a.a1[j] > 0.0 ? s * mk : 0.0;
        }
        for (std::size_t i = 0; i < h1; ++i) {
            grad[o.b1 + i] += d1[i];
            for (std::size_t j = 0; j < m.n_features; ++j) grad[o.w1 + i * m.n_features + j] += d1[i] * xr[j];
        }
    }
    return loss * inv_n;
}

/// Mean loss over all rows, dropout off.
inline double mlp_loss(const MLPModel& m, const Matrix& x, std::span<const int> labels) {
    double loss = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
        const auto p = m.predict_proba(x.row(r));
        loss -= std::log(std::max(p[static_cast<std::size_t>(labels[r])], 1e-300));
    }
    return loss / static_cast<double>(x.rows);
}

/// Mini-batch Adam with a seeded shuffle and seeded inverted-dropout masks.
inline MLPModel train_mlp(const Matrix& x, std::span<const int> labels, const MLPSpec& spec, const TrainConfig& cfg,
                          int n_classes = 0) {
    cfg.validate();
    if (x.rows == 0) throw DataError("train_mlp: empty training set");
    if (x.rows != labels.size()) throw ContractError("train_mlp: label count differs from row count");
    n_classes = std::max(n_classes, classify_detail::count_classes(labels));
    if (n_classes < 2) throw DataError("train_mlp: at least two classes required");
    MLPModel m = init_mlp(x.cols, n_classes, spec, cfg.seed);
    Adam opt(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    Rng rng(Fnv1a().text("lungfuse-mlp-train").u64(cfg.seed).value());
    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), x.rows);
    const auto h1 = static_cast<std::size_t>(spec.hidden1);
    const double keep_scale = 1.0 / (1.0 - spec.dropout);
    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad, masks;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t n = std::min(batch, order.size() - start);
            std::span<const std::size_t> rows(order.data() + start, n);
            masks.clear();
            if (spec.dropout > 0.0) {
                masks.resize(n * h1);
                for (double& v : masks) v = rng.uniform() < spec.dropout ? 0.0 : keep_scale;
            }
            mlp_loss_grad(m, x, labels, rows, masks, grad);
            opt.step(m.params, grad);
        }
    }
    for (double v : m.params)
        if (!std::isfinite(v)) throw NumericalError("train_mlp: non-finite weight after training");
    return m;
}

}  // namespace lungfuse
