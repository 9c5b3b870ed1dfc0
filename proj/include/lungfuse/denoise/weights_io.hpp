#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lungfuse/denoise/train.hpp"

namespace lungfuse {

/// Weights file: a JSON document
///   {"format": "lungfuse-denoiser", "version": 1, "byte_order": "little-endian float32 hex",
///    "spec": ["conv:1:8", "relu", ...], "seed": 42, "epoch": 30, "loss_log": [...],
///    "layers": [{"out_ch": 8, "in_ch": 1, "kernel": "<hex>", "bias": "<hex>"}, ...]}
/// Each float is written as 8 hex digits of its IEEE-754 binary32 bytes, least
/// significant byte first. Kernel order is [out][in][ky][kx].
namespace weights_detail {

inline std::string encode_f32(const std::vector<double>& values) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(values.size() * 8);
    for (double v : values) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        for (int b = 0; b < 4; ++b) {
            const auto byte = static_cast<unsigned>((bits >> (8 * b)) & 0xffu);
            out += digits[byte >> 4];
            out += digits[byte & 0xf];
        }
    }
    return out;
}

inline std::vector<double> decode_f32(const std::string& hex, std::size_t expected) {
    if (hex.size() != expected * 8) throw FormatError("weights: float array has wrong length", 0);
    auto nibble = [](char c) -> unsigned {
        if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
        throw FormatError("weights: invalid hex digit", 0);
    };
    std::vector<double> out(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) {
            const std::size_t p = i * 8 + static_cast<std::size_t>(b) * 2;
            bits |= ((nibble(hex[p]) << 4) | nibble(hex[p + 1])) << (8 * b);
        }
        out[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    return out;
}

}  // namespace weights_detail

inline nlohmann::json denoiser_to_json(const DenoiserModel& m) {
    nlohmann::json j;
    j["format"] = "lungfuse-denoiser";
    j["version"] = 1;
    j["byte_order"] = "little-endian float32 hex";
    j["spec"] = nlohmann::json::array();
    for (const auto& l : m.spec.layers) j["spec"].push_back(to_string(l));
    j["seed"] = m.seed;
    j["epoch"] = m.epochs;
    j["loss_log"] = m.loss_log;
    j["layers"] = nlohmann::json::array();
    for (const auto& c : m.weights.convs)
        j["layers"].push_back({{"out_ch", c.out_ch},
                               {"in_ch", c.in_ch},
                               {"kernel", weights_detail::encode_f32(c.kernel)},
                               {"bias", weights_detail::encode_f32(c.bias)}});
    return j;
}

inline DenoiserModel denoiser_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "lungfuse-denoiser") throw FormatError("weights: unexpected format tag", 0);
        DenoiserModel m;
        for (const auto& s : j.at("spec")) m.spec.layers.push_back(parse_layer(s.get<std::string>()));
        m.spec.validate();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.epochs = j.at("epoch").get<int>();
        m.loss_log = j.value("loss_log", std::vector<double>{});
        m.weights = NetWeights::zeros_like(m.spec);
        const auto& layers = j.at("layers");
        if (layers.size() != m.weights.convs.size()) throw FormatError("weights: layer count does not match spec", 0);
        for (std::size_t i = 0; i < layers.size(); ++i) {
            auto& c = m.weights.convs[i];
            if (layers[i].at("out_ch").get<int>() != c.out_ch || layers[i].at("in_ch").get<int>() != c.in_ch)
                throw FormatError("weights: layer " + std::to_string(i) + " shape does not match spec", 0);
            c.kernel = weights_detail::decode_f32(layers[i].at("kernel").get<std::string>(), c.kernel.size());
            c.bias = weights_detail::decode_f32(layers[i].at("bias").get<std::string>(), c.bias.size());
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("weights: ") + e.what(), 0);
    }
}

inline void save_denoiser(const DenoiserModel& m, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << denoiser_to_json(m).dump(2) << "\n";
}

inline DenoiserModel load_denoiser(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return denoiser_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what(), e.byte);
    }
}

}  // namespace lungfuse
