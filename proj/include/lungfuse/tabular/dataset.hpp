#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lungfuse/core/error.hpp"

namespace lungfuse {

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::vector<std::string> categories;  // declared set, categorical only

    friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

/// A cell is missing (monostate), a number, or a category label.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

/// Mixed clinical/genomic table with one class label per row.
struct TabularDataset {
    std::vector<ColumnSpec> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::vector<std::string> row_ids;

    std::size_t size() const { return rows.size(); }

    void validate() const {
        if (labels.size() != rows.size()) throw ContractError("TabularDataset: label count differs from row count");
        if (!row_ids.empty() && row_ids.size() != rows.size())
            throw ContractError("TabularDataset: row id count differs from row count");
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != columns.size())
                throw ContractError("TabularDataset: row " + std::to_string(r) + " has " +
                                    std::to_string(rows[r].size()) + " cells, expected " +
                                    std::to_string(columns.size()));
            for (std::size_t c = 0; c < columns.size(); ++c) {
                const Cell& cell = rows[r][c];
                if (is_missing(cell)) continue;
                if (columns[c].kind == ColumnKind::numeric) {
                    if (!std::holds_alternative<double>(cell) || !std::isfinite(std::get<double>(cell)))
                        throw ContractError("TabularDataset: column '" + columns[c].name + "' expects a finite number");
                } else if (!std::holds_alternative<std::string>(cell)) {
                    throw ContractError("TabularDataset: column '" + columns[c].name + "' expects a category");
                }
            }
            if (labels[r] < 0 || (!class_names.empty() && labels[r] >= static_cast<int>(class_names.size())))
                throw ContractError("TabularDataset: label out of range in row " + std::to_string(r));
        }
    }

    TabularDataset subset(const std::vector<std::size_t>& idx) const {
        TabularDataset out{columns, {}, {}, class_names, {}};
        for (std::size_t i : idx) {
            out.rows.push_back(rows.at(i));
            out.labels.push_back(labels.at(i));
            if (!row_ids.empty()) out.row_ids.push_back(row_ids.at(i));
        }
        return out;
    }
};

/// Schema document accompanying a CSV file.
///
/// {
///   "columns": [{"name": "age", "kind": "numeric"},
///               {"name": "sex", "kind": "categorical", "categories": ["F", "M"]}],
///   "label_column": "subtype", "classes": ["adenocarcinoma", "squamous"],
///   "id_column": "patient_id", "missing_marker": ""
/// }
struct TabularSchema {
    std::vector<ColumnSpec> columns;
    std::string label_column;
    std::vector<std::string> classes;
    std::string id_column;
    std::string missing_marker;
};

inline TabularSchema parse_schema(const nlohmann::json& j) {
    TabularSchema s;
    try {
        for (const auto& c : j.at("columns")) {
            ColumnSpec spec;
            spec.name = c.at("name").get<std::string>();
            const auto kind = c.at("kind").get<std::string>();
            if (kind == "numeric") {
                spec.kind = ColumnKind::numeric;
            } else if (kind == "categorical") {
                spec.kind = ColumnKind::categorical;
                spec.categories = c.at("categories").get<std::vector<std::string>>();
                if (spec.categories.empty()) throw DataError("schema: column '" + spec.name + "' has no categories");
            } else {
                throw DataError("schema: column '" + spec.name + "' has unknown kind '" + kind + "'");
            }
            s.columns.push_back(std::move(spec));
        }
        s.label_column = j.at("label_column").get<std::string>();
        s.classes = j.at("classes").get<std::vector<std::string>>();
        s.id_column = j.value("id_column", std::string{});
        s.missing_marker = j.value("missing_marker", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("schema: ") + e.what());
    }
    if (s.classes.size() < 2) throw DataError("schema: at least two classes required");
    return s;
}

inline TabularSchema read_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema " + path.string());
    try {
        return parse_schema(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what(), e.byte);
    }
}

/// Splits one CSV record; supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (ch != '\r') {
            field += ch;
        }
    }
    out.push_back(std::move(field));
    return out;
}

inline TabularDataset parse_tabular_csv(std::istream& in, const TabularSchema& schema) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("csv: empty input");
    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < header.size(); ++i) pos[header[i]] = i;
    auto locate = [&](const std::string& name) {
        auto it = pos.find(name);
        if (it == pos.end()) throw DataError("csv: header lacks column '" + name + "'");
        return it->second;
    };
    std::vector<std::size_t> col_pos;
    for (const auto& c : schema.columns) col_pos.push_back(locate(c.name));
    const std::size_t label_pos = locate(schema.label_column);
    const std::size_t id_pos = schema.id_column.empty() ? 0 : locate(schema.id_column);

    TabularDataset ds;
    ds.columns = schema.columns;
    ds.class_names = schema.classes;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()));
        std::vector<Cell> row;
        for (std::size_t c = 0; c < schema.columns.size(); ++c) {
            const std::string& f = fields[col_pos[c]];
            if (f == schema.missing_marker) {
                row.emplace_back(std::monostate{});
            } else if (schema.columns[c].kind == ColumnKind::numeric) {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(f, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != f.size() || !std::isfinite(v))
                    throw DataError("csv line " + std::to_string(line_no) + ": column '" + schema.columns[c].name +
                                    "' has non-numeric value '" + f + "'");
                row.emplace_back(v);
            } else {
                row.emplace_back(f);
            }
        }
        const std::string& label = fields[label_pos];
        const auto it = std::find(schema.classes.begin(), schema.classes.end(), label);
        if (it == schema.classes.end())
            throw DataError("csv line " + std::to_string(line_no) + ": unknown class '" + label + "'");
        ds.rows.push_back(std::move(row));
        ds.labels.push_back(static_cast<int>(it - schema.classes.begin()));
        ds.row_ids.push_back(schema.id_column.empty() ? std::to_string(ds.rows.size() - 1) : fields[id_pos]);
    }
    ds.validate();
    return ds;
}

inline TabularDataset read_tabular(const std::filesystem::path& csv_path, const TabularSchema& schema) {
    std::ifstream in(csv_path);
    if (!in) throw DataError("cannot open " + csv_path.string());
    return parse_tabular_csv(in, schema);
}

}  // namespace lungfuse
