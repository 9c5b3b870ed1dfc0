#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "lungfuse/mmclassify/kfold.hpp"

namespace lungfuse {

struct ComparisonReport {
    std::vector<MetricsReport> rows;  // tabular-only, ct-only, fused, multimodal

    const MetricsReport& at(InputConfig c) const {
        for (const auto& r : rows)
            if (r.input == to_string(c)) return r;
        throw ContractError("ComparisonReport: no row for " + to_string(c));
    }
};

/// Same folds and seeds for every configuration; only the visible feature blocks differ.
inline ComparisonReport compare_modalities(const MultiModalData& d, int k, const ClassifierConfig& cfg,
                                           std::uint64_t seed) {
    ComparisonReport out;
    for (auto c : {InputConfig::tabular_only, InputConfig::ct_only, InputConfig::fused, InputConfig::multimodal})
        kfold_detail::check_modalities(d, c);
    for (auto c : {InputConfig::tabular_only, InputConfig::ct_only, InputConfig::fused, InputConfig::multimodal})
        out.rows.push_back(kfold_evaluate(d, c, k, cfg, seed));
    return out;
}

inline nlohmann::json to_json(const ComparisonReport& r) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& row : r.rows) j[row.input] = to_json(row);
    return j;
}

/// Plain-text table, one row per input configuration, values in percent as mean ± std over folds.
inline std::string comparison_table(const ComparisonReport& r) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-14s %-7s %-14s %-14s %-14s %-14s\n", "Input", "Model", "Accuracy", "Precision",
                  "Recall", "F1");
    out += buf;
    auto cell = [](const MeanStd& m) {
        char c[32];
        std::snprintf(c, sizeof c, "%.1f ± %.1f", 100.0 * m.mean, 100.0 * m.std);
        return std::string(c);
    };
    for (const auto& row : r.rows) {
        // printf widths count bytes; the ± sign is two bytes in UTF-8
        std::snprintf(buf, sizeof buf, "%-14s %-7s %-15s %-15s %-15s %-15s\n", row.input.c_str(), row.model.c_str(),
                      cell(row.accuracy).c_str(), cell(row.precision).c_str(), cell(row.recall).c_str(),
                      cell(row.f1).c_str());
        out += buf;
    }
    return out;
}

}  // namespace lungfuse
