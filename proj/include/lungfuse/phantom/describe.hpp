#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "lungfuse/imgcore/pgm.hpp"
#include "lungfuse/tabular/dataset.hpp"

namespace lungfuse {

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what(), e.byte);
    }
}

/// Summary of a dataset directory: rows per class, intensity statistics per
/// modality and missing cells per tabular column.
inline nlohmann::json describe(const std::filesystem::path& dir) {
    const auto manifest = read_json_file(dir / "manifest.json");
    const auto schema = read_schema(dir / "schema.json");
    const auto table = read_tabular(dir / "clinical.csv", schema);

    std::map<std::string, std::size_t> per_class;
    for (const auto& c : schema.classes) per_class[c] = 0;
    struct Stats {
        double sum = 0.0, lo = 1.0, hi = 0.0;
        std::size_t n = 0;
        int width = 0, height = 0;
    } ct, pet;
    auto accumulate = [](Stats& s, const ImageGray& img) {
        for (double v : img.data) {
            s.sum += v;
            s.lo = std::min(s.lo, v);
            s.hi = std::max(s.hi, v);
        }
        s.n += img.size();
        s.width = img.width;
        s.height = img.height;
    };
    std::size_t rows = 0;
    for (const auto& row : manifest.at("rows")) {
        ++rows;
        const auto label = row.at("label").get<std::string>();
        if (!per_class.contains(label)) throw DataError("manifest: unknown label '" + label + "'");
        ++per_class[label];
        accumulate(ct, read_image(dir / row.at("ct").get<std::string>()));
        accumulate(pet, read_image(dir / row.at("pet").get<std::string>()));
    }
    auto stats_json = [](const Stats& s) {
        return nlohmann::json{{"width", s.width},
                              {"height", s.height},
                              {"mean", s.n ? s.sum / static_cast<double>(s.n) : 0.0},
                              {"min", s.n ? s.lo : 0.0},
                              {"max", s.n ? s.hi : 0.0}};
    };
    nlohmann::json missing = nlohmann::json::object();
    std::size_t missing_total = 0;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        std::size_t m = 0;
        for (const auto& r : table.rows) m += is_missing(r[c]) ? 1 : 0;
        missing[table.columns[c].name] = m;
        missing_total += m;
    }
    return {{"rows", rows},
            {"tabular_rows", table.size()},
            {"counts_per_class", per_class},
            {"ct", stats_json(ct)},
            {"pet", stats_json(pet)},
            {"missing_values", missing},
            {"missing_total", missing_total}};
}

}  // namespace lungfuse
