#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <vector>

#include "lungfuse/core/hash.hpp"
#include "lungfuse/core/matrix.hpp"
#include "lungfuse/core/rng.hpp"

namespace lungfuse {

struct SmoteResult {
    Matrix x;
    std::vector<int> labels;
    std::size_t n_original = 0;

    std::uint64_t digest() const {
        Fnv1a h;
        h.f64s(x.data);
        for (int l : labels) h.u64(static_cast<std::uint64_t>(l));
        return h.value();
    }
};

/// Synthetic minority oversampling. Every class below the majority count is
/// topped up with points p + u (q - p), where p is a random member of the class,
/// q one of p's k nearest same-class neighbours (Euclidean, ties by row order)
/// and u ~ U(0,1). Original rows come first, unchanged.
inline SmoteResult smote(const Matrix& x, std::span<const int> labels, int k, std::uint64_t seed) {
    if (labels.size() != x.rows) throw ContractError("smote: label count differs from row count");
    if (k < 1) throw ContractError("smote: k must be >= 1");
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
    std::size_t majority = 0;
    for (const auto& [cls, rows] : members) majority = std::max(majority, rows.size());

    SmoteResult out{x, std::vector<int>(labels.begin(), labels.end()), x.rows};
    Rng rng(seed);
    std::vector<double> synth(x.cols);
    for (const auto& [cls, rows] : members) {
        if (rows.size() == majority) continue;
        if (rows.size() < 2)
            throw DataError("smote: class " + std::to_string(cls) + " has " + std::to_string(rows.size()) +
                            " member(s); at least 2 required");
        const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), rows.size() - 1);
        std::vector<std::vector<std::size_t>> neighbours(rows.size());
        for (std::size_t a = 0; a < rows.size(); ++a) {
            std::vector<std::pair<double, std::size_t>> dist;
            for (std::size_t b = 0; b < rows.size(); ++b) {
                if (a == b) continue;
                double d = 0.0;
                for (std::size_t c = 0; c < x.cols; ++c) {
                    const double diff = x(rows[a], c) - x(rows[b], c);
                    d += diff * diff;
                }
                dist.emplace_back(d, b);
            }
            std::sort(dist.begin(), dist.end());
            for (std::size_t i = 0; i < kk; ++i) neighbours[a].push_back(dist[i].second);
        }
        for (std::size_t n = rows.size(); n < majority; ++n) {
            const std::size_t a = rng.index(rows.size());
            const std::size_t b = neighbours[a][rng.index(kk)];
            const double u = rng.uniform();
            for (std::size_t c = 0; c < x.cols; ++c) {
                const double p = x(rows[a], c), q = x(rows[b], c);
                synth[c] = p + u * (q - p);
            }
            out.x.append_row(synth);
            out.labels.push_back(cls);
        }
    }
    return out;
}

}  // namespace lungfuse
