#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include "lungfuse/imgcore/image.hpp"

namespace lungfuse {

inline constexpr double kDegToRad = std::numbers::pi / 180.0;

/// Similarity transform from the moving (PET) frame to the fixed (CT) frame:
/// p' = scale * R(theta) * p + (tx, ty), with p measured from the image centre
/// ((w-1)/2, (h-1)/2) of the respective frame.
struct RigidTransform {
    double tx = 0.0;
    double ty = 0.0;
    double theta = 0.0;  // radians
    double scale = 1.0;

    static RigidTransform identity() { return {}; }

    std::pair<double, double> apply(double x, double y) const {
        const double c = std::cos(theta), s = std::sin(theta);
        return {scale * (c * x - s * y) + tx, scale * (s * x + c * y) + ty};
    }

    RigidTransform inverse() const {
        if (!(scale > 0.0)) throw ContractError("RigidTransform: scale must be > 0");
        const double inv_s = 1.0 / scale;
        const double c = std::cos(-theta), s = std::sin(-theta);
        return {-inv_s * (c * tx - s * ty), -inv_s * (s * tx + c * ty), -theta, inv_s};
    }
};

/// Inverse-mapping bilinear resampling into an out_w x out_h grid. Neighbours
/// outside the source image contribute zero.
inline ImageGray resample_bilinear(const ImageGray& img, const RigidTransform& t, int out_w, int out_h) {
    if (!(t.scale > 0.0)) throw ContractError("resample_bilinear: scale must be > 0");
    ImageGray out(out_w, out_h, 0.0);
    const double in_cx = (img.width - 1) / 2.0, in_cy = (img.height - 1) / 2.0;
    const double out_cx = (out_w - 1) / 2.0, out_cy = (out_h - 1) / 2.0;
    const double c = std::cos(t.theta), s = std::sin(t.theta);
    const double inv_s = 1.0 / t.scale;
    auto sample = [&](int x, int y) -> double {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
        return img.at(x, y);
    };
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const double qx = x - out_cx - t.tx;
            const double qy = y - out_cy - t.ty;
            // R(-theta) * q / scale
            const double px = inv_s * (c * qx + s * qy) + in_cx;
            const double py = inv_s * (-s * qx + c * qy) + in_cy;
            const double fx = std::floor(px), fy = std::floor(py);
            const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
            const double ax = px - fx, ay = py - fy;
            if (x0 < -1 || y0 < -1 || x0 >= img.width || y0 >= img.height) continue;
            out.at(x, y) = (1 - ax) * (1 - ay) * sample(x0, y0) + ax * (1 - ay) * sample(x0 + 1, y0) +
                           (1 - ax) * ay * sample(x0, y0 + 1) + ax * ay * sample(x0 + 1, y0 + 1);
        }
    }
    return out;
}

inline ImageGray resample_bilinear(const ImageGray& img, const RigidTransform& t) {
    return resample_bilinear(img, t, img.width, img.height);
}

}  // namespace lungfuse
