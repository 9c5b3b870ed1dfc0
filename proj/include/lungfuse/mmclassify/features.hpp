#pragma once

#include <cmath>
#include <vector>

#include "lungfuse/imgcore/image.hpp"
#include "lungfuse/wavelet/dwt2.hpp"

namespace lungfuse {

inline constexpr int kPoolGrid = 8;

inline std::size_t image_feature_length(int levels) { return 2 * (3 * static_cast<std::size_t>(levels) + 1) + kPoolGrid * kPoolGrid; }

/// Fixed-length descriptor of an image:
///   for each level 1..levels and band lh, lv, ld: mean |c|, mean c^2
///   for the coarsest ll band: mean |c|, mean c^2
///   8x8 grid of block means (row-major), blocks spanning [floor(i*W/8), floor((i+1)*W/8))
inline std::vector<double> extract_image_features(const ImageGray& img, int levels = 2,
                                                  WaveletFamily family = WaveletFamily::haar) {
    img.validate();
    if (img.width < 16 || img.height < 16)
        throw ContractError("extract_image_features: image must be at least 16x16");
    const auto pyr = dwt2(img, family, levels);
    std::vector<double> f;
    f.reserve(image_feature_length(levels));
    auto stats = [&](const ImageGray& band) {
        double a = 0.0, e = 0.0;
        for (double c : band.data) {
            a += std::abs(c);
            e += c * c;
        }
        f.push_back(a / static_cast<double>(band.size()));
        f.push_back(e / static_cast<double>(band.size()));
    };
    for (const auto& d : pyr.details) {
        stats(d.lh);
        stats(d.lv);
        stats(d.ld);
    }
    stats(pyr.ll);
    for (int gy = 0; gy < kPoolGrid; ++gy) {
        const int y0 = gy * img.height / kPoolGrid, y1 = (gy + 1) * img.height / kPoolGrid;
        for (int gx = 0; gx < kPoolGrid; ++gx) {
            const int x0 = gx * img.width / kPoolGrid, x1 = (gx + 1) * img.width / kPoolGrid;
            double s = 0.0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) s += img.at(x, y);
            f.push_back(s / static_cast<double>((y1 - y0) * (x1 - x0)));
        }
    }
    return f;
}

}  // namespace lungfuse
