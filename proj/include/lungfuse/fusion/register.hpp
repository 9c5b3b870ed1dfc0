#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "lungfuse/fusion/rigid.hpp"

namespace lungfuse {

/// Search budget for register_rigid. Angles are in degrees here for readability.
struct RegistrationSearch {
    double t_range = 16.0;
    double t_step = 2.0;
    double theta_range_deg = 6.0;
    double theta_step_deg = 2.0;
    double scale_min = 0.9;
    double scale_max = 1.1;
    double scale_step = 0.05;
    double t_resolution = 0.05;
    double theta_resolution_deg = 0.05;
    double scale_resolution = 0.002;
};

struct RegistrationResult {
    RigidTransform transform;
    double ncc = 0.0;
    std::size_t evaluations = 0;
};

/// Normalized cross-correlation; returns 0 when either side has no variance.
inline double normalized_cross_correlation(const ImageGray& a, const ImageGray& b) {
    require_same_dims(a, b, "normalized_cross_correlation");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a.data[i];
        mb += b.data[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a.data[i] - ma, db = b.data[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

namespace register_detail {

inline bool has_variance(const ImageGray& img) { return img.max() > img.min(); }

}  // namespace register_detail

/// Maximizes NCC(fixed, resample(moving, T)) with a coarse lexicographic grid
/// over (tx, ty, theta, scale) followed by coordinate hill-climbing with step halving.
inline RegistrationResult register_rigid(const ImageGray& fixed, const ImageGray& moving,
                                         const RegistrationSearch& search = {}) {
    fixed.validate();
    moving.validate();
    if (!register_detail::has_variance(fixed) || !register_detail::has_variance(moving))
        throw DataError("register_rigid: no correlation signal (constant image)");

    RegistrationResult best;
    best.ncc = -std::numeric_limits<double>::infinity();
    auto score = [&](const RigidTransform& t) {
        ++best.evaluations;
        return normalized_cross_correlation(fixed, resample_bilinear(moving, t, fixed.width, fixed.height));
    };

    const int nt = static_cast<int>(std::floor(2.0 * search.t_range / search.t_step + 1e-9)) + 1;
    const int nth = static_cast<int>(std::floor(2.0 * search.theta_range_deg / search.theta_step_deg + 1e-9)) + 1;
    const int ns = static_cast<int>(std::floor((search.scale_max - search.scale_min) / search.scale_step + 1e-9)) + 1;
    for (int i = 0; i < nt; ++i) {
        for (int j = 0; j < nt; ++j) {
            for (int k = 0; k < nth; ++k) {
                for (int m = 0; m < ns; ++m) {
                    const RigidTransform t{-search.t_range + i * search.t_step, -search.t_range + j * search.t_step,
                                           (-search.theta_range_deg + k * search.theta_step_deg) * kDegToRad,
                                           search.scale_min + m * search.scale_step};
                    const double s = score(t);
                    if (s > best.ncc) {
                        best.ncc = s;
                        best.transform = t;
                    }
                }
            }
        }
    }

    std::array<double, 4> step{search.t_step / 2, search.t_step / 2, search.theta_step_deg / 2 * kDegToRad,
                               search.scale_step / 2};
    const std::array<double, 4> floor_step{search.t_resolution, search.t_resolution,
                                           search.theta_resolution_deg * kDegToRad, search.scale_resolution};
    for (std::size_t d = 0; d < 4; ++d) step[d] = std::max(step[d], floor_step[d]);

    auto param = [](RigidTransform& t, std::size_t d) -> double& {
        switch (d) {
            case 0: return t.tx;
            case 1: return t.ty;
            case 2: return t.theta;
            default: return t.scale;
        }
    };

    while (true) {
        for (int iter = 0; iter < 500; ++iter) {
            bool improved = false;
            for (std::size_t d = 0; d < 4 && !improved; ++d) {
                for (double sign : {1.0, -1.0}) {
                    RigidTransform cand = best.transform;
                    param(cand, d) += sign * step[d];
                    if (cand.scale <= 0.0) continue;
                    const double s = score(cand);
                    if (s > best.ncc + 1e-12) {
                        best.ncc = s;
                        best.transform = cand;
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) break;
        }
        bool at_floor = true;
        for (std::size_t d = 0; d < 4; ++d) {
            if (step[d] > floor_step[d] * (1.0 + 1e-9)) at_floor = false;
            step[d] = std::max(step[d] / 2, floor_step[d]);
        }
        if (at_floor) break;
    }
    return best;
}

}  // namespace lungfuse
