#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lungfuse/imgcore/image.hpp"
#include "lungfuse/wavelet/filters.hpp"

namespace lungfuse {

/// Detail coefficients of one level: lh is horizontal detail (lowpass along rows,
/// highpass along columns), lv vertical, ld diagonal.
struct DetailBands {
    ImageGray lh;
    ImageGray lv;
    ImageGray ld;
};

/// Multi-level decomposition. details[0] is the finest level; ll is the
/// coarsest approximation. Coefficient rasters may hold any finite value.
struct WaveletPyramid {
    WaveletFamily family = WaveletFamily::haar;
    int levels = 0;
    ImageGray ll;
    std::vector<DetailBands> details;
    int width = 0;
    int height = 0;
};

template <class Pyr, class F>
void for_each_band(Pyr& pyr, F&& fn) {
    fn(pyr.ll);
    for (auto& d : pyr.details) {
        fn(d.lh);
        fn(d.lv);
        fn(d.ld);
    }
}

/// Levels obtainable before an axis would drop below two samples.
inline int max_wavelet_levels(int width, int height) {
    int levels = 0;
    while (width >= 2 && height >= 2) {
        width = (width + 1) / 2;
        height = (height + 1) / 2;
        ++levels;
    }
    return levels;
}

namespace wavelet_detail {

struct LevelBands {
    ImageGray ll, lh, lv, ld;
};

/// Odd axes are extended by one half-sample mirror sample (x[N] = x[N-1]).
inline LevelBands analyze_level(const ImageGray& x, const FilterPair& f) {
    const int w = x.width, h = x.height;
    const int we = w + (w & 1), he = h + (h & 1);
    const int hw = we / 2, hh = he / 2;

    ImageGray row_low(hw, he), row_high(hw, he);
    std::vector<double> line(static_cast<std::size_t>(we));
    std::vector<double> a(static_cast<std::size_t>(hw)), d(static_cast<std::size_t>(hw));
    for (int y = 0; y < he; ++y) {
        const int sy = std::min(y, h - 1);
        for (int i = 0; i < we; ++i) line[i] = x.at(std::min(i, w - 1), sy);
        analyze_1d(line, f, a, d);
        for (int k = 0; k < hw; ++k) {
            row_low.at(k, y) = a[k];
            row_high.at(k, y) = d[k];
        }
    }

    LevelBands out{ImageGray(hw, hh), ImageGray(hw, hh), ImageGray(hw, hh), ImageGray(hw, hh)};
    std::vector<double> col(static_cast<std::size_t>(he));
    std::vector<double> ca(static_cast<std::size_t>(hh)), cd(static_cast<std::size_t>(hh));
    for (int k = 0; k < hw; ++k) {
        for (int y = 0; y < he; ++y) col[y] = row_low.at(k, y);
        analyze_1d(col, f, ca, cd);
        for (int j = 0; j < hh; ++j) {
            out.ll.at(k, j) = ca[j];
            out.lh.at(k, j) = cd[j];
        }
        for (int y = 0; y < he; ++y) col[y] = row_high.at(k, y);
        analyze_1d(col, f, ca, cd);
        for (int j = 0; j < hh; ++j) {
            out.lv.at(k, j) = ca[j];
            out.ld.at(k, j) = cd[j];
        }
    }
    return out;
}

inline ImageGray synthesize_level(const ImageGray& ll, const DetailBands& det, int w, int h, const FilterPair& f) {
    const int we = w + (w & 1), he = h + (h & 1);
    const int hw = we / 2, hh = he / 2;
    for (const ImageGray* b : {&ll, &det.lh, &det.lv, &det.ld})
        if (b->width != hw || b->height != hh)
            throw ContractError("idwt2: band is " + std::to_string(b->width) + "x" + std::to_string(b->height) +
                                ", expected " + std::to_string(hw) + "x" + std::to_string(hh));

    ImageGray row_low(hw, he), row_high(hw, he);
    std::vector<double> col(static_cast<std::size_t>(he));
    std::vector<double> ca(static_cast<std::size_t>(hh)), cd(static_cast<std::size_t>(hh));
    for (int k = 0; k < hw; ++k) {
        for (int j = 0; j < hh; ++j) {
            ca[j] = ll.at(k, j);
            cd[j] = det.lh.at(k, j);
        }
        synthesize_1d(ca, cd, f, col);
        for (int y = 0; y < he; ++y) row_low.at(k, y) = col[y];
        for (int j = 0; j < hh; ++j) {
            ca[j] = det.lv.at(k, j);
            cd[j] = det.ld.at(k, j);
        }
        synthesize_1d(ca, cd, f, col);
        for (int y = 0; y < he; ++y) row_high.at(k, y) = col[y];
    }

    ImageGray out(w, h);
    std::vector<double> line(static_cast<std::size_t>(we));
    std::vector<double> a(static_cast<std::size_t>(hw)), d(static_cast<std::size_t>(hw));
    for (int y = 0; y < h; ++y) {
        for (int k = 0; k < hw; ++k) {
            a[k] = row_low.at(k, y);
            d[k] = row_high.at(k, y);
        }
        synthesize_1d(a, d, f, line);
        for (int x = 0; x < w; ++x) out.at(x, y) = line[x];
    }
    return out;
}

}  // namespace wavelet_detail

/// Separable 2D DWT with orthonormal filters, rows then columns, keeping even
/// indices after filtering. Recursion continues on the approximation band.
inline WaveletPyramid dwt2(const ImageGray& img, WaveletFamily family = WaveletFamily::haar, int levels = 1) {
    img.validate();
    if (levels < 1) throw ContractError("dwt2: levels must be >= 1");
    const int feasible = max_wavelet_levels(img.width, img.height);
    if (levels > feasible)
        throw ContractError("dwt2: " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                            " image supports at most " + std::to_string(feasible) + " level(s), requested " +
                            std::to_string(levels));
    const FilterPair f = filters_for(family);
    WaveletPyramid pyr;
    pyr.family = family;
    pyr.levels = levels;
    pyr.width = img.width;
    pyr.height = img.height;
    ImageGray current = img;
    for (int l = 0; l < levels; ++l) {
        auto bands = wavelet_detail::analyze_level(current, f);
        pyr.details.push_back({std::move(bands.lh), std::move(bands.lv), std::move(bands.ld)});
        current = std::move(bands.ll);
    }
    pyr.ll = std::move(current);
    return pyr;
}

inline ImageGray idwt2(const WaveletPyramid& pyr) {
    if (pyr.levels < 1 || static_cast<int>(pyr.details.size()) != pyr.levels)
        throw ContractError("idwt2: details list length must equal levels");
    if (pyr.width < 1 || pyr.height < 1) throw ContractError("idwt2: invalid original dimensions");
    std::vector<std::pair<int, int>> dims{{pyr.width, pyr.height}};
    for (int l = 1; l < pyr.levels; ++l) dims.emplace_back((dims.back().first + 1) / 2, (dims.back().second + 1) / 2);
    const FilterPair f = filters_for(pyr.family);
    ImageGray current = pyr.ll;
    for (int l = pyr.levels - 1; l >= 0; --l)
        current = wavelet_detail::synthesize_level(current, pyr.details[l], dims[l].first, dims[l].second, f);
    return current;
}

}  // namespace lungfuse
