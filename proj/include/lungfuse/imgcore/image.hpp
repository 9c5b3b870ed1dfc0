#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lungfuse/core/error.hpp"

namespace lungfuse {

/// 2D grayscale raster, row-major, real-valued intensities.
///
/// Pixel (x, y) lives at data[y * width + x]. Every producer in the library
/// keeps values finite; `validate()` enforces that at I/O boundaries.
struct ImageGray {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    ImageGray() = default;
    ImageGray(int w, int h, double fill = 0.0) : width(w), height(h) {
        if (w < 1 || h < 1) throw ContractError("ImageGray: dimensions must be >= 1, got " +
                                                std::to_string(w) + "x" + std::to_string(h));
        data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
    }
    ImageGray(int w, int h, std::vector<double> values) : width(w), height(h), data(std::move(values)) {
        validate();
    }

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    std::size_t size() const { return data.size(); }

    void validate() const {
        if (width < 1 || height < 1)
            throw ContractError("ImageGray: dimensions must be >= 1, got " + std::to_string(width) + "x" +
                                std::to_string(height));
        if (data.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw ContractError("ImageGray: data length does not match width*height");
        for (double v : data)
            if (!std::isfinite(v)) throw ContractError("ImageGray: non-finite pixel value");
    }

    double min() const { return *std::min_element(data.begin(), data.end()); }
    double max() const { return *std::max_element(data.begin(), data.end()); }

    friend bool operator==(const ImageGray&, const ImageGray&) = default;
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

    bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }

    std::size_t count() const { return static_cast<std::size_t>(std::count(data.begin(), data.end(), 1)); }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Intersection over union; two empty masks score 1.
inline double jaccard(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height) throw ContractError("jaccard: mask dimensions differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        inter += (a.data[i] && b.data[i]) ? 1 : 0;
        uni += (a.data[i] || b.data[i]) ? 1 : 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

template <class A, class B>
void require_same_dims(const A& a, const B& b, const char* op) {
    if (a.width != b.width || a.height != b.height)
        throw ContractError(std::string(op) + ": dimension mismatch (" + std::to_string(a.width) + "x" +
                            std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                            std::to_string(b.height) + ")");
}

inline ImageGray clamp_unit(ImageGray img) {
    for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
    return img;
}

}  // namespace lungfuse
