#pragma once

#include <cstddef>
#include <vector>

#include "lungfuse/imgcore/image.hpp"
#include "lungfuse/imgcore/volume.hpp"

namespace lungfuse {

inline constexpr double kDefaultLungThreshold = 0.35;
inline constexpr std::size_t kDefaultMinRegionPx = 16;
inline constexpr double kDefaultMinLungFraction = 0.01;

/// Dark interior regions of a normalized CT slice.
///
/// Candidates are pixels strictly below `threshold`, grouped into 4-connected
/// components. Components touching the border (air around the body) and
/// components smaller than `min_region_px` are dropped.
inline BinaryMask lung_mask(const ImageGray& img, double threshold = kDefaultLungThreshold,
                            std::size_t min_region_px = kDefaultMinRegionPx) {
    img.validate();
    const int w = img.width;
    const int h = img.height;
    BinaryMask mask(w, h);
    std::vector<std::uint8_t> visited(img.size(), 0);
    std::vector<int> stack;
    std::vector<int> component;

    for (int start = 0; start < w * h; ++start) {
        if (visited[start] || !(img.data[start] < threshold)) continue;
        component.clear();
        bool touches_border = false;
        stack.push_back(start);
        visited[start] = 1;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            component.push_back(p);
            const int x = p % w;
            const int y = p / w;
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1) touches_border = true;
            const int nbrs[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
            for (const auto& n : nbrs) {
                if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
                const int q = n[1] * w + n[0];
                if (visited[q] || !(img.data[q] < threshold)) continue;
                visited[q] = 1;
                stack.push_back(q);
            }
        }
        if (touches_border || component.size() < min_region_px) continue;
        for (int p : component) mask.data[p] = 1;
    }
    return mask;
}

/// Sets every background pixel that is not 4-connected to the image border, so
/// enclosed structures (nodules inside a lung) join the region around them.
inline BinaryMask fill_holes(const BinaryMask& mask) {
    const int w = mask.width;
    const int h = mask.height;
    std::vector<std::uint8_t> outside(mask.data.size(), 0);
    std::vector<int> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if ((x == 0 || y == 0 || x == w - 1 || y == h - 1) && !mask.at(x, y)) {
                outside[y * w + x] = 1;
                stack.push_back(y * w + x);
            }
    while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int x = p % w;
        const int y = p / w;
        const int nbrs[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (const auto& n : nbrs) {
            if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
            const int q = n[1] * w + n[0];
            if (outside[q] || mask.data[q]) continue;
            outside[q] = 1;
            stack.push_back(q);
        }
    }
    BinaryMask out(w, h);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = outside[i] ? 0 : 1;
    return out;
}

/// Lung mask with enclosed lesions included.
inline BinaryMask lung_field(const ImageGray& img, double threshold = kDefaultLungThreshold,
                             std::size_t min_region_px = kDefaultMinRegionPx) {
    return fill_holes(lung_mask(img, threshold, min_region_px));
}

/// Zeroes pixels outside the mask.
inline ImageGray apply_mask(const ImageGray& img, const BinaryMask& mask) {
    require_same_dims(img, mask, "apply_mask");
    ImageGray out = img;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        if (!mask.data[i]) out.data[i] = 0.0;
    return out;
}

/// Keeps slices whose lung-mask area fraction is at least `min_lung_fraction`, in order.
inline VolumeGray filter_lung_slices(const VolumeGray& vol, double threshold = kDefaultLungThreshold,
                                     double min_lung_fraction = kDefaultMinLungFraction,
                                     std::size_t min_region_px = kDefaultMinRegionPx) {
    vol.validate();
    VolumeGray out;
    out.spacing = vol.spacing;
    for (const auto& slice : vol.slices) {
        const double frac =
            static_cast<double>(lung_mask(slice, threshold, min_region_px).count()) / static_cast<double>(slice.size());
        if (frac >= min_lung_fraction) out.slices.push_back(slice);
    }
    if (out.slices.empty()) throw DataError("no lung slices: no slice reaches lung fraction " +
                                            std::to_string(min_lung_fraction));
    return out;
}

}  // namespace lungfuse
