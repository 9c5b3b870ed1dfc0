#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "lungfuse/wavelet/dwt2.hpp"

namespace lungfuse {

/// How approximation and detail coefficients of the two modalities combine.
struct FusionRule {
    enum class Approx { average, weighted };
    enum class Detail { max_abs, average };

    Approx ll_rule = Approx::average;
    double ct_weight = 0.5;  // used by Approx::weighted
    Detail detail_rule = Detail::max_abs;

    void validate() const {
        if (!(ct_weight >= 0.0 && ct_weight <= 1.0))
            throw ContractError("FusionRule: CT weight must lie in [0,1], got " + std::to_string(ct_weight));
    }
};

/// "average" or "weighted:W".
inline void parse_ll_rule(std::string_view s, FusionRule& rule) {
    if (s == "average") {
        rule.ll_rule = FusionRule::Approx::average;
        return;
    }
    constexpr std::string_view prefix = "weighted:";
    if (s.substr(0, prefix.size()) == prefix) {
        const std::string num(s.substr(prefix.size()));
        std::size_t used = 0;
        double w = 0.0;
        try {
            w = std::stod(num, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != num.size()) throw ContractError("invalid ll-rule weight '" + num + "'");
        rule.ll_rule = FusionRule::Approx::weighted;
        rule.ct_weight = w;
        rule.validate();
        return;
    }
    throw ContractError("unknown ll-rule '" + std::string(s) + "' (expected average|weighted:W)");
}

inline FusionRule::Detail parse_detail_rule(std::string_view s) {
    if (s == "maxabs" || s == "max_abs") return FusionRule::Detail::max_abs;
    if (s == "average") return FusionRule::Detail::average;
    throw ContractError("unknown detail-rule '" + std::string(s) + "' (expected maxabs|average)");
}

inline std::string ll_rule_name(const FusionRule& r) {
    return r.ll_rule == FusionRule::Approx::average ? "average" : "weighted:" + std::to_string(r.ct_weight);
}

inline std::string detail_rule_name(const FusionRule& r) {
    return r.detail_rule == FusionRule::Detail::max_abs ? "maxabs" : "average";
}

/// Coefficient-level fusion of two decompositions with identical geometry.
/// max_abs keeps the operand with the larger magnitude; ties keep CT.
inline WaveletPyramid fuse_pyramids(const WaveletPyramid& ct, const WaveletPyramid& pet, const FusionRule& rule) {
    rule.validate();
    if (ct.levels != pet.levels || ct.width != pet.width || ct.height != pet.height || ct.family != pet.family)
        throw ContractError("fuse_pyramids: decompositions differ in geometry");
    WaveletPyramid out = ct;
    const double w = rule.ll_rule == FusionRule::Approx::average ? 0.5 : rule.ct_weight;
    for (std::size_t i = 0; i < out.ll.size(); ++i) out.ll.data[i] = w * ct.ll.data[i] + (1.0 - w) * pet.ll.data[i];

    auto mix = [&](ImageGray& dst, const ImageGray& a, const ImageGray& b) {
        for (std::size_t i = 0; i < dst.size(); ++i) {
            if (rule.detail_rule == FusionRule::Detail::average)
                dst.data[i] = 0.5 * (a.data[i] + b.data[i]);
            else
                dst.data[i] = std::abs(b.data[i]) > std::abs(a.data[i]) ? b.data[i] : a.data[i];
        }
    };
    for (int l = 0; l < out.levels; ++l) {
        mix(out.details[l].lh, ct.details[l].lh, pet.details[l].lh);
        mix(out.details[l].lv, ct.details[l].lv, pet.details[l].lv);
        mix(out.details[l].ld, ct.details[l].ld, pet.details[l].ld);
    }
    return out;
}

/// Decompose both inputs, fuse coefficients per `rule`, reconstruct and clamp to [0,1].
inline ImageGray fuse_wavelet(const ImageGray& ct, const ImageGray& pet_registered,
                              WaveletFamily family = WaveletFamily::haar, int levels = 1, const FusionRule& rule = {}) {
    require_same_dims(ct, pet_registered, "fuse_wavelet");
    const auto fused = fuse_pyramids(dwt2(ct, family, levels), dwt2(pet_registered, family, levels), rule);
    return clamp_unit(idwt2(fused));
}

}  // namespace lungfuse
