#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "lungfuse/core/hash.hpp"
#include "lungfuse/core/matrix.hpp"
#include "lungfuse/tabular/dataset.hpp"

namespace lungfuse {

/// Statistics for one source column, learned from training rows only.
struct ColumnFit {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    double impute = 0.0;  // numeric: mean of observed values
    double mean = 0.0;    // numeric: mean after imputation
    double std = 1.0;     // numeric: population std after imputation; 1 when degenerate
    std::string mode;                 // categorical: most frequent observed value
    std::vector<std::string> layout;  // categorical: one-hot order (declared categories)
};

struct FittedPreprocessor {
    std::vector<ColumnSpec> schema;
    std::vector<ColumnFit> columns;

    std::size_t width() const {
        std::size_t w = 0;
        for (const auto& c : columns) w += c.kind == ColumnKind::numeric ? 1 : c.layout.size();
        return w;
    }

    std::vector<std::string> feature_names() const {
        std::vector<std::string> names;
        for (const auto& c : columns) {
            if (c.kind == ColumnKind::numeric)
                names.push_back(c.name);
            else
                for (const auto& cat : c.layout) names.push_back(c.name + "=" + cat);
        }
        return names;
    }

    std::uint64_t digest() const {
        Fnv1a h;
        for (const auto& c : columns) {
            h.text(c.name).f64(c.impute).f64(c.mean).f64(c.std).text(c.mode);
            for (const auto& l : c.layout) h.text(l);
        }
        return h.value();
    }
};

inline nlohmann::json to_json(const FittedPreprocessor& p) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : p.columns) {
        if (c.kind == ColumnKind::numeric)
            cols.push_back({{"name", c.name}, {"kind", "numeric"}, {"impute", c.impute}, {"mean", c.mean}, {"std", c.std}});
        else
            cols.push_back({{"name", c.name}, {"kind", "categorical"}, {"mode", c.mode}, {"layout", c.layout}});
    }
    return {{"columns", cols}, {"features", p.feature_names()}};
}

/// Mean imputation + z-score for numeric columns; mode imputation + one-hot for categorical.
inline FittedPreprocessor fit_preprocess(const TabularDataset& train) {
    train.validate();
    if (train.size() < 2) throw ContractError("fit_preprocess: at least 2 rows required");
    if (train.columns.empty()) throw ContractError("fit_preprocess: at least 1 column required");
    FittedPreprocessor fp;
    fp.schema = train.columns;
    for (std::size_t c = 0; c < train.columns.size(); ++c) {
        const auto& spec = train.columns[c];
        ColumnFit fit;
        fit.name = spec.name;
        fit.kind = spec.kind;
        if (spec.kind == ColumnKind::numeric) {
            double sum = 0.0;
            std::size_t observed = 0;
            for (const auto& row : train.rows)
                if (!is_missing(row[c])) {
                    sum += std::get<double>(row[c]);
                    ++observed;
                }
            if (observed == 0) throw DataError("fit_preprocess: column '" + spec.name + "' is entirely missing");
            fit.impute = sum / static_cast<double>(observed);
            std::vector<double> filled;
            filled.reserve(train.size());
            for (const auto& row : train.rows) filled.push_back(is_missing(row[c]) ? fit.impute : std::get<double>(row[c]));
            double mean = 0.0;
            for (double v : filled) mean += v;
            mean /= static_cast<double>(filled.size());
            double var = 0.0;
            for (double v : filled) var += (v - mean) * (v - mean);
            var /= static_cast<double>(filled.size());
            fit.mean = mean;
            fit.std = std::sqrt(var) > 1e-12 ? std::sqrt(var) : 1.0;
        } else {
            std::vector<std::size_t> counts(spec.categories.size(), 0);
            std::size_t observed = 0;
            for (const auto& row : train.rows) {
                if (is_missing(row[c])) continue;
                const auto& v = std::get<std::string>(row[c]);
                const auto it = std::find(spec.categories.begin(), spec.categories.end(), v);
                if (it == spec.categories.end())
                    throw DataError("fit_preprocess: column '" + spec.name + "' has undeclared category '" + v + "'");
                ++counts[it - spec.categories.begin()];
                ++observed;
            }
            if (observed == 0) throw DataError("fit_preprocess: column '" + spec.name + "' is entirely missing");
            const auto best = std::max_element(counts.begin(), counts.end());  // first maximum wins ties
            fit.mode = spec.categories[best - counts.begin()];
            fit.layout = spec.categories;
        }
        fp.columns.push_back(std::move(fit));
    }
    return fp;
}

struct EncodedTable {
    Matrix x;
    std::vector<std::string> feature_names;
    std::size_t unseen_categories = 0;  // cells encoded as an all-zero block
};

inline EncodedTable apply_preprocess(const FittedPreprocessor& p, const TabularDataset& ds) {
    if (ds.columns.size() != p.columns.size())
        throw ContractError("apply_preprocess: schema has " + std::to_string(ds.columns.size()) +
                            " columns, preprocessor expects " + std::to_string(p.columns.size()));
    for (std::size_t c = 0; c < p.columns.size(); ++c)
        if (ds.columns[c].name != p.columns[c].name || ds.columns[c].kind != p.columns[c].kind)
            throw ContractError("apply_preprocess: schema mismatch at column " + std::to_string(c) + " ('" +
                                ds.columns[c].name + "' vs '" + p.columns[c].name + "')");
    EncodedTable out{Matrix(ds.size(), p.width()), p.feature_names(), 0};
    for (std::size_t r = 0; r < ds.size(); ++r) {
        if (ds.rows[r].size() != p.columns.size()) throw ContractError("apply_preprocess: ragged row");
        std::size_t j = 0;
        for (std::size_t c = 0; c < p.columns.size(); ++c) {
            const auto& fit = p.columns[c];
            const Cell& cell = ds.rows[r][c];
            if (fit.kind == ColumnKind::numeric) {
                const double v = is_missing(cell) ? fit.impute : std::get<double>(cell);
                out.x(r, j++) = (v - fit.mean) / fit.std;
            } else {
                const std::string& v = is_missing(cell) ? fit.mode : std::get<std::string>(cell);
                const auto it = std::find(fit.layout.begin(), fit.layout.end(), v);
                if (it == fit.layout.end())
                    ++out.unseen_categories;
                else
                    out.x(r, j + static_cast<std::size_t>(it - fit.layout.begin())) = 1.0;
                j += fit.layout.size();
            }
        }
    }
    return out;
}

/// Per-column z-scoring of an already-numeric matrix (image feature blocks).
struct ColumnScaler {
    std::vector<double> mean;
    std::vector<double> std;

    static ColumnScaler fit(const Matrix& x) {
        ColumnScaler s{std::vector<double>(x.cols, 0.0), std::vector<double>(x.cols, 1.0)};
        if (x.rows == 0) return s;
        for (std::size_t c = 0; c < x.cols; ++c) {
            double m = 0.0;
            for (std::size_t r = 0; r < x.rows; ++r) m += x(r, c);
            m /= static_cast<double>(x.rows);
            double v = 0.0;
            for (std::size_t r = 0; r < x.rows; ++r) v += (x(r, c) - m) * (x(r, c) - m);
            v /= static_cast<double>(x.rows);
            s.mean[c] = m;
            s.std[c] = std::sqrt(v) > 1e-12 ? std::sqrt(v) : 1.0;
        }
        return s;
    }

    Matrix apply(const Matrix& x) const {
        if (x.cols != mean.size()) throw ContractError("ColumnScaler: width mismatch");
        Matrix out = x;
        for (std::size_t r = 0; r < x.rows; ++r)
            for (std::size_t c = 0; c < x.cols; ++c) out(r, c) = (x(r, c) - mean[c]) / std[c];
        return out;
    }

    std::uint64_t digest() const { return Fnv1a().f64s(mean).f64s(std).value(); }
};

}  // namespace lungfuse
