#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lungfuse/imgcore/image.hpp"

namespace lungfuse {

/// Affine map of [min, max] onto [0, 1]. A constant image maps to all zeros.
inline ImageGray normalize_unit(const ImageGray& img) {
    img.validate();
    const double lo = img.min();
    const double hi = img.max();
    ImageGray out(img.width, img.height, 0.0);
    if (hi <= lo) return out;
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = std::clamp((img.data[i] - lo) * inv, 0.0, 1.0);
    return out;
}

/// Bin of a [0,1] value among `bins` equal-width bins; 1.0 falls in the last bin.
inline std::size_t unit_bin(double v, std::size_t bins) {
    const auto b = static_cast<std::size_t>(std::max(0.0, v) * static_cast<double>(bins));
    return std::min(b, bins - 1);
}

/// Histogram equalization. Each pixel maps to cdf(bin) = P(X <= upper edge of its bin),
/// which is non-decreasing in the input value and lands in (0, 1].
inline ImageGray equalize_contrast(const ImageGray& img, std::size_t bins = 256) {
    if (bins < 2) throw ContractError("equalize_contrast: bins must be >= 2");
    img.validate();
    std::vector<std::size_t> hist(bins, 0);
    for (double v : img.data) {
        if (v < 0.0 || v > 1.0) throw ContractError("equalize_contrast: input must lie in [0,1]");
        ++hist[unit_bin(v, bins)];
    }
    std::vector<double> cdf(bins);
    std::size_t running = 0;
    const double total = static_cast<double>(img.size());
    for (std::size_t b = 0; b < bins; ++b) {
        running += hist[b];
        cdf[b] = static_cast<double>(running) / total;
    }
    ImageGray out(img.width, img.height);
    for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = cdf[unit_bin(img.data[i], bins)];
    return out;
}

}  // namespace lungfuse
