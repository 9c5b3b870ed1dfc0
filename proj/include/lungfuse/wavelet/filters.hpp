#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lungfuse/core/error.hpp"

namespace lungfuse {

enum class WaveletFamily { haar, db2 };

inline std::string_view to_string(WaveletFamily f) { return f == WaveletFamily::haar ? "haar" : "db2"; }

inline WaveletFamily parse_wavelet_family(std::string_view s) {
    if (s == "haar") return WaveletFamily::haar;
    if (s == "db2") return WaveletFamily::db2;
    throw ContractError("unknown wavelet family '" + std::string(s) + "' (expected haar|db2)");
}

/// Orthonormal analysis pair. The highpass is the quadrature mirror of the
/// lowpass: high[n] = (-1)^n * low[L-1-n].
struct FilterPair {
    std::vector<double> low;
    std::vector<double> high;
};

inline FilterPair filters_for(WaveletFamily family) {
    std::vector<double> low;
    if (family == WaveletFamily::haar) {
        const double s = 1.0 / std::sqrt(2.0);
        low = {s, s};
    } else {
        const double r3 = std::sqrt(3.0);
        const double d = 4.0 * std::sqrt(2.0);
        low = {(1.0 + r3) / d, (3.0 + r3) / d, (3.0 - r3) / d, (1.0 - r3) / d};
    }
    const std::size_t n = low.size();
    std::vector<double> high(n);
    for (std::size_t i = 0; i < n; ++i) high[i] = ((i % 2 == 0) ? 1.0 : -1.0) * low[n - 1 - i];
    return {std::move(low), std::move(high)};
}

/// One analysis step on an even-length signal with periodic wrap:
/// approx[k] = sum_n low[n] x[(2k+n) mod N], detail likewise with `high`.
inline void analyze_1d(std::span<const double> x, const FilterPair& f, std::span<double> approx,
                       std::span<double> detail) {
    const std::size_t n = x.size();
    const std::size_t half = n / 2;
    const std::size_t taps = f.low.size();
    for (std::size_t k = 0; k < half; ++k) {
        double a = 0.0, d = 0.0;
        for (std::size_t t = 0; t < taps; ++t) {
            const double v = x[(2 * k + t) % n];
            a += f.low[t] * v;
            d += f.high[t] * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

/// Exact inverse of analyze_1d (the transpose of an orthogonal operator).
inline void synthesize_1d(std::span<const double> approx, std::span<const double> detail, const FilterPair& f,
                          std::span<double> x) {
    const std::size_t n = x.size();
    const std::size_t half = n / 2;
    const std::size_t taps = f.low.size();
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t k = 0; k < half; ++k)
        for (std::size_t t = 0; t < taps; ++t) x[(2 * k + t) % n] += f.low[t] * approx[k] + f.high[t] * detail[k];
}

}  // namespace lungfuse
