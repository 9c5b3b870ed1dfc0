#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "lungfuse/core/rng.hpp"
#include "lungfuse/denoise/net.hpp"
#include "lungfuse/imgcore/image.hpp"
#include "lungfuse/mmclassify/mlp.hpp"

namespace lungfuse::testing {

inline ImageGray random_image(int w, int h, std::uint64_t seed) {
    Rng r(seed);
    ImageGray img(w, h);
    for (double& v : img.data) v = r.uniform();
    return img;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("lungfuse_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// |a - n| / max(|a|, |n|); both below `floor` counts as agreement.
inline double relative_error(double analytic, double numeric, double floor = 1e-10) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale < floor) return 0.0;
    return std::abs(analytic - numeric) / scale;
}

struct GradCheck {
    std::string layer;
    std::size_t coords = 0;
    double worst = 0.0;
};

/// Central differences on `per_layer` distinct sampled parameters of every conv layer.
inline std::vector<GradCheck> denoiser_grad_check(std::uint64_t seed, std::size_t per_layer = 50, int size = 8,
                                                  double h = 1e-4) {
    const auto spec = ConvNetSpec::default_autoencoder();
    NetWeights w = NetWeights::glorot(spec, seed);
    Rng rng(seed + 1);
    for (auto& c : w.convs)
        for (double& b : c.bias) b = rng.uniform(-0.1, 0.1);
    const ImageGray input = random_image(size, size, seed + 2);
    const ImageGray target = random_image(size, size, seed + 3);
    const NetWeights grad = backward(spec, w, input, target);

    std::vector<GradCheck> out;
    for (std::size_t li = 0; li < w.convs.size(); ++li) {
        auto& c = w.convs[li];
        const std::size_t nk = c.kernel.size(), n = nk + c.bias.size();
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        rng.shuffle(idx);
        idx.resize(std::min(per_layer, n));
        GradCheck gc{"conv" + std::to_string(li + 1) + " (" + std::to_string(c.in_ch) + "->" +
                         std::to_string(c.out_ch) + ")",
                     idx.size(), 0.0};
        for (std::size_t i : idx) {
            double& p = i < nk ? c.kernel[i] : c.bias[i - nk];
            const double analytic = i < nk ? grad.convs[li].kernel[i] : grad.convs[li].bias[i - nk];
            const double saved = p;
            p = saved + h;
            const double lp = loss_mse(forward(spec, w, input), target);
            p = saved - h;
            const double lm = loss_mse(forward(spec, w, input), target);
            p = saved;
            gc.worst = std::max(gc.worst, relative_error(analytic, (lp - lm) / (2 * h)));
        }
        out.push_back(gc);
    }
    return out;
}

/// Same check for the classifier head, dropout disabled, three classes so the
/// output layer has more than 50 parameters.
inline std::vector<GradCheck> mlp_grad_check(std::uint64_t seed, std::size_t per_layer = 50, double h = 1e-5) {
    const std::size_t n = 24, features = 6;
    Rng rng(seed);
    Matrix x(n, features);
    for (double& v : x.data) v = rng.normal();
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 3);
    MLPModel m = init_mlp(features, 3, MLPSpec{}, seed);
    for (double& v : m.params) v += rng.uniform(-0.05, 0.05);  // non-zero biases
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    std::vector<double> grad;
    mlp_loss_grad(m, x, labels, rows, {}, grad);

    const auto o = m.offsets();
    const std::pair<std::size_t, std::size_t> layers[] = {{o.w1, o.w2}, {o.w2, o.w3}, {o.w3, o.total}};
    std::vector<GradCheck> out;
    for (std::size_t li = 0; li < 3; ++li) {
        const auto [begin, end] = layers[li];
        std::vector<std::size_t> idx;
        for (std::size_t i = begin; i < end; ++i) idx.push_back(i);
        rng.shuffle(idx);
        idx.resize(std::min(per_layer, idx.size()));
        GradCheck gc{"dense" + std::to_string(li + 1), idx.size(), 0.0};
        for (std::size_t i : idx) {
            const double saved = m.params[i];
            m.params[i] = saved + h;
            const double lp = mlp_loss(m, x, labels);
            m.params[i] = saved - h;
            const double lm = mlp_loss(m, x, labels);
            m.params[i] = saved;
            gc.worst = std::max(gc.worst, relative_error(grad[i], (lp - lm) / (2 * h)));
        }
        out.push_back(gc);
    }
    return out;
}

inline int run_command(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

}  // namespace lungfuse::testing

namespace lungfuse::testing {

/// Feature 0 = label + N(0, noise), the rest pure N(0, 1).
inline Matrix planted_signal(std::size_t rows, std::size_t noise_features, std::uint64_t seed, std::vector<int>& labels,
                             double noise = 0.5) {
    Rng rng(seed);
    Matrix x(rows, noise_features + 1);
    labels.assign(rows, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        labels[r] = static_cast<int>(r % 2);
        x(r, 0) = labels[r] + noise * rng.normal();
        for (std::size_t c = 1; c <= noise_features; ++c) x(r, c) = rng.normal();
    }
    return x;
}

struct Stump {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = -1.0;
};

/// Brute force: every midpoint between distinct values of every feature, sums
/// recomputed from scratch, logistic loss at margin 0 (g = 0.5 - y, h = 0.25).
inline Stump best_first_stump(const Matrix& x, const std::vector<int>& labels, double lambda = 1.0,
                              double min_child_weight = 1.0) {
    Stump best;
    for (std::size_t f = 0; f < x.cols; ++f) {
        std::vector<double> vals;
        for (std::size_t r = 0; r < x.rows; ++r) vals.push_back(x(r, f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            const double thr = 0.5 * (vals[i] + vals[i + 1]);
            double gl = 0, hl = 0, gr = 0, hr = 0;
            for (std::size_t r = 0; r < x.rows; ++r) {
                const double g = 0.5 - labels[r], h = 0.25;
                if (x(r, f) < thr) {
                    gl += g;
                    hl += h;
                } else {
                    gr += g;
                    hr += h;
                }
            }
            if (hl < min_child_weight || hr < min_child_weight) continue;
            const double gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                                       (gl + gr) * (gl + gr) / (hl + hr + lambda));
            if (gain > best.gain) best = {f, thr, gain};
        }
    }
    return best;
}

}  // namespace lungfuse::testing

#include "lungfuse/fusion/fuse.hpp"
#include "lungfuse/imgcore/lung_mask.hpp"
#include "lungfuse/mmclassify/features.hpp"
#include "lungfuse/mmclassify/kfold.hpp"
#include "lungfuse/phantom/generator.hpp"

namespace lungfuse::testing {

/// In-memory multimodal table for a generated phantom set: PET is aligned with
/// the recorded jitter, fused with haar level 1, and both image blocks use the
/// lung-field masked features the pipeline uses.
inline MultiModalData phantom_multimodal(const PhantomDataset& ds) {
    MultiModalData d;
    d.class_names = phantom_class_names();
    for (const auto& name : phantom_numeric_columns()) d.tabular.columns.push_back({name});
    const auto& cats = phantom_categorical_columns();
    for (std::size_t i = 0; i < cats.size(); ++i)
        d.tabular.columns.push_back({cats[i], ColumnKind::categorical, phantom_category_sets()[i]});
    d.tabular.class_names = d.class_names;
    for (const auto& p : ds.patients) {
        std::vector<Cell> row;
        for (double v : p.numeric) row.push_back(std::isnan(v) ? Cell{} : Cell{v});
        for (const auto& c : p.categorical) row.push_back(c.empty() ? Cell{} : Cell{c});
        d.tabular.rows.push_back(std::move(row));
        d.tabular.labels.push_back(p.label);
        d.tabular.row_ids.push_back(p.id);

        const ImageGray aligned = clamp_unit(resample_bilinear(p.pet, p.jitter.inverse()));
        const ImageGray fused = fuse_wavelet(p.ct, aligned);
        const BinaryMask field = lung_field(p.ct);
        d.ct_features.append_row(extract_image_features(apply_mask(p.ct, field)));
        d.fused_features.append_row(extract_image_features(apply_mask(fused, field)));
        d.labels.push_back(p.label);
        d.ids.push_back(p.id);
    }
    return d;
}

/// `a` rows of class 0 then `b` rows of class 1, three shifted gaussian columns.
inline Matrix minority_majority(std::size_t a, std::size_t b, std::uint64_t seed, std::vector<int>& labels) {
    Rng rng(seed);
    Matrix x(a + b, 3);
    labels.clear();
    for (std::size_t r = 0; r < a + b; ++r) {
        labels.push_back(r < a ? 0 : 1);
        for (std::size_t c = 0; c < 3; ++c) x(r, c) = rng.normal() + (r < a ? 0.0 : 2.0);
    }
    return x;
}

/// Smallest distance from `v` to any segment between two rows of `pts`.
inline bool on_minority_segment(std::span<const double> v, const Matrix& x, const std::vector<std::size_t>& pts, double tol) {
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (i == j) continue;
            auto p = x.row(pts[i]);
            auto q = x.row(pts[j]);
            double num = 0, den = 0;
            for (std::size_t c = 0; c < v.size(); ++c) {
                num += (v[c] - p[c]) * (q[c] - p[c]);
                den += (q[c] - p[c]) * (q[c] - p[c]);
            }
            if (den == 0) continue;
            const double u = num / den;
            if (u < -tol || u > 1 + tol) continue;
            double err = 0;
            for (std::size_t c = 0; c < v.size(); ++c) err = std::max(err, std::abs(p[c] + u * (q[c] - p[c]) - v[c]));
            if (err <= tol) return true;
        }
    return false;
}

}  // namespace lungfuse::testing
