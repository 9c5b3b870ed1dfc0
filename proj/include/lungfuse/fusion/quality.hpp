#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lungfuse/imgcore/image.hpp"
#include "lungfuse/imgcore/intensity.hpp"

namespace lungfuse {

/// Shannon entropy in bits of the `bins`-bin histogram over [0,1].
inline double shannon_entropy(const ImageGray& img, std::size_t bins = 256) {
    std::vector<std::size_t> hist(bins, 0);
    for (double v : img.data) ++hist[unit_bin(v, bins)];
    const double n = static_cast<double>(img.size());
    double h = 0.0;
    for (std::size_t c : hist) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

/// Mutual information in bits from a joint bins x bins histogram over [0,1]^2.
inline double mutual_information(const ImageGray& a, const ImageGray& b, std::size_t bins = 64) {
    require_same_dims(a, b, "mutual_information");
    std::vector<std::size_t> joint(bins * bins, 0), ha(bins, 0), hb(bins, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::size_t ia = unit_bin(a.data[i], bins), ib = unit_bin(b.data[i], bins);
        ++joint[ia * bins + ib];
        ++ha[ia];
        ++hb[ib];
    }
    const double n = static_cast<double>(a.size());
    double mi = 0.0;
    for (std::size_t i = 0; i < bins; ++i) {
        for (std::size_t j = 0; j < bins; ++j) {
            const std::size_t c = joint[i * bins + j];
            if (c == 0) continue;
            // p_ij * log2(p_ij / (p_i p_j)) = p_ij * log2(c * n / (a_i * b_j))
            mi += static_cast<double>(c) / n *
                  std::log2(static_cast<double>(c) * n / (static_cast<double>(ha[i]) * static_cast<double>(hb[j])));
        }
    }
    return mi;
}

inline double mean_squared_error(const ImageGray& a, const ImageGray& b) {
    require_same_dims(a, b, "mean_squared_error");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

/// Peak signal-to-noise ratio in dB; +inf for identical images.
inline double psnr(const ImageGray& a, const ImageGray& b, double peak = 1.0) {
    const double mse = mean_squared_error(a, b);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

/// Mean SSIM over all window x window placements (stride 1), population
/// statistics, C1 = 0.01^2, C2 = 0.03^2 for a unit dynamic range.
inline double ssim(const ImageGray& a, const ImageGray& b, int window = 8) {
    require_same_dims(a, b, "ssim");
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const int wx = std::min(window, a.width), wy = std::min(window, a.height);
    const double n = static_cast<double>(wx) * wy;
    double total = 0.0;
    std::size_t count = 0;
    for (int y0 = 0; y0 + wy <= a.height; ++y0) {
        for (int x0 = 0; x0 + wx <= a.width; ++x0) {
            double ma = 0.0, mb = 0.0;
            for (int y = y0; y < y0 + wy; ++y)
                for (int x = x0; x < x0 + wx; ++x) {
                    ma += a.at(x, y);
                    mb += b.at(x, y);
                }
            ma /= n;
            mb /= n;
            double vaa = 0.0, vbb = 0.0, vab = 0.0;
            for (int y = y0; y < y0 + wy; ++y)
                for (int x = x0; x < x0 + wx; ++x) {
                    const double da = a.at(x, y) - ma, db = b.at(x, y) - mb;
                    vaa += da * da;
                    vbb += db * db;
                    vab += da * db;
                }
            vaa /= n;
            vbb /= n;
            vab /= n;
            total += ((2 * ma * mb + c1) * (2 * vab + c2)) / ((ma * ma + mb * mb + c1) * (vaa + vbb + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

struct QualityReport {
    double entropy_fused = 0.0;
    double mi_fused_ct = 0.0;
    double mi_fused_pet = 0.0;
    double psnr_vs_ct = 0.0;
    double ssim_vs_ct = 0.0;
};

inline QualityReport fusion_quality(const ImageGray& fused, const ImageGray& ct, const ImageGray& pet) {
    require_same_dims(fused, ct, "fusion_quality");
    require_same_dims(fused, pet, "fusion_quality");
    return {shannon_entropy(fused), mutual_information(fused, ct), mutual_information(fused, pet), psnr(fused, ct),
            ssim(fused, ct)};
}

}  // namespace lungfuse
