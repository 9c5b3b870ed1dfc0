#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lungfuse/core/adam.hpp"
#include "lungfuse/core/rng.hpp"
#include "lungfuse/denoise/net.hpp"

namespace lungfuse {

struct NoiseModel {
    enum class Kind { gaussian, poisson };
    Kind kind = Kind::gaussian;
    double sigma = 0.1;    // gaussian std
    double scale = 100.0;  // poisson: counts per unit intensity
};

/// Shared by the denoiser and the classifier head.
struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 96;  // clamped to the dataset size
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 30;
    std::uint64_t seed = 42;
    NoiseModel noise;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ContractError("TrainConfig: learning_rate must be > 0");
        if (batch_size < 1) throw ContractError("TrainConfig: batch_size must be >= 1");
        if (epochs < 0) throw ContractError("TrainConfig: epochs must be >= 0");
    }
};

/// Noisy copy clamped to [0,1].
inline ImageGray add_noise(const ImageGray& clean, const NoiseModel& noise, Rng& rng) {
    ImageGray out = clean;
    for (double& v : out.data) {
        if (noise.kind == NoiseModel::Kind::gaussian)
            v += noise.sigma * rng.normal();
        else
            v = static_cast<double>(rng.poisson(std::max(0.0, v) * noise.scale)) / noise.scale;
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

struct DenoiserModel {
    ConvNetSpec spec;
    NetWeights weights;
    std::uint64_t seed = 0;
    int epochs = 0;
    std::vector<double> loss_log;  // mean training loss per epoch
};

namespace train_detail {

inline std::vector<double> flatten(NetWeights& w) {
    std::vector<double> flat;
    w.for_each([&](double& v) { flat.push_back(v); });
    return flat;
}

inline void unflatten(NetWeights& w, const std::vector<double>& flat) {
    std::size_t i = 0;
    w.for_each([&](double& v) { v = flat[i++]; });
}

}  // namespace train_detail

/// Trains the auto-encoder to map noisy inputs back to their clean images.
/// Each epoch reshuffles with the seeded stream and draws fresh noise.
inline DenoiserModel train_denoiser(const std::vector<ImageGray>& clean_set, const TrainConfig& cfg,
                                    const ConvNetSpec& spec = ConvNetSpec::default_autoencoder()) {
    cfg.validate();
    spec.validate();
    if (clean_set.empty()) throw DataError("train_denoiser: empty dataset");
    for (const auto& img : clean_set) check_input(spec, img);

    DenoiserModel model{spec, NetWeights::glorot(spec, cfg.seed), cfg.seed, cfg.epochs, {}};
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    Adam adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), clean_set.size());
    std::vector<std::size_t> order(clean_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            NetWeights grad = NetWeights::zeros_like(spec);
            double batch_loss = 0.0;
            for (std::size_t b = start; b < end; ++b) {
                const ImageGray& clean = clean_set[order[b]];
                const ImageGray noisy = add_noise(clean, cfg.noise, rng);
                batch_loss += backward_into(spec, model.weights, noisy, clean, grad);
            }
            if (!std::isfinite(batch_loss))
                throw NumericalError("train_denoiser: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                     ", batch starting at " + std::to_string(start));
            epoch_loss += batch_loss;
            const double inv = 1.0 / static_cast<double>(end - start);
            auto g = train_detail::flatten(grad);
            for (double& v : g) v *= inv;
            auto params = train_detail::flatten(model.weights);
            adam.step(params, g);
            train_detail::unflatten(model.weights, params);
        }
        model.loss_log.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    if (!model.weights.all_finite()) throw NumericalError("train_denoiser: weights diverged");
    return model;
}

}  // namespace lungfuse
