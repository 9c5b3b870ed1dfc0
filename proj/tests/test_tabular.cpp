#include <gtest/gtest.h>

#include <sstream>

#include "lungfuse/tabular.hpp"
#include "support.hpp"

using namespace lungfuse;

namespace {

TabularDataset numeric_table(std::vector<std::vector<Cell>> rows) {
    TabularDataset ds;
    for (std::size_t c = 0; c < rows.front().size(); ++c) ds.columns.push_back({"n" + std::to_string(c)});
    ds.rows = std::move(rows);
    ds.labels.assign(ds.rows.size(), 0);
    return ds;
}

TabularDataset category_table(const std::vector<Cell>& cells) {
    TabularDataset ds;
    ds.columns.push_back({"cat", ColumnKind::categorical, {"A", "B"}});
    for (const auto& c : cells) ds.rows.push_back({c});
    ds.labels.assign(ds.rows.size(), 0);
    return ds;
}

}  // namespace

using lungfuse::testing::minority_majority;
using lungfuse::testing::on_minority_segment;

TEST(Preprocess, NumericMeanImputation) {
    const auto ds = numeric_table({{1.0}, {std::monostate{}}, {3.0}});
    const auto p = fit_preprocess(ds);
    EXPECT_DOUBLE_EQ(p.columns[0].impute, 2.0);
    EXPECT_DOUBLE_EQ(p.columns[0].mean, 2.0);
    EXPECT_NEAR(p.columns[0].std, std::sqrt(2.0 / 3.0), 1e-15);
    const auto enc = apply_preprocess(p, ds);
    EXPECT_NEAR(enc.x(1, 0), 0.0, 1e-15);
}

TEST(Preprocess, CategoricalModeAndOneHot) {
    const auto ds = category_table({std::string("A"), std::string("A"), std::string("B"), std::monostate{}});
    const auto p = fit_preprocess(ds);
    EXPECT_EQ(p.columns[0].mode, "A");
    EXPECT_EQ(p.columns[0].layout, (std::vector<std::string>{"A", "B"}));
    const auto enc = apply_preprocess(p, ds);
    EXPECT_EQ(enc.x.cols, 2u);
    EXPECT_EQ(enc.x(2, 0), 0.0);
    EXPECT_EQ(enc.x(2, 1), 1.0);
    EXPECT_EQ(enc.x(3, 0), 1.0);  // missing -> mode
    EXPECT_EQ(enc.feature_names, (std::vector<std::string>{"cat=A", "cat=B"}));
}

TEST(Preprocess, ConstantColumnScalesToZero) {
    const auto ds = numeric_table({{4.0}, {4.0}, {4.0}});
    const auto p = fit_preprocess(ds);
    EXPECT_EQ(p.columns[0].std, 1.0);
    for (double v : apply_preprocess(p, ds).x.data) EXPECT_EQ(v, 0.0);
}

TEST(Preprocess, TrainingSetIsStandardized) {
    Rng rng(5);
    std::vector<std::vector<Cell>> rows;
    for (int r = 0; r < 40; ++r) rows.push_back({rng.normal(10, 3), rng.uniform() < 0.2 ? Cell{} : Cell{rng.uniform()}});
    const auto ds = numeric_table(rows);
    const auto x = apply_preprocess(fit_preprocess(ds), ds).x;
    for (std::size_t c = 0; c < 2; ++c) {
        double m = 0, v = 0;
        for (std::size_t r = 0; r < x.rows; ++r) m += x(r, c);
        m /= x.rows;
        for (std::size_t r = 0; r < x.rows; ++r) v += (x(r, c) - m) * (x(r, c) - m);
        EXPECT_NEAR(m, 0.0, 1e-9);
        EXPECT_NEAR(std::sqrt(v / x.rows), 1.0, 1e-9);
    }
}

TEST(Preprocess, MeanRowMapsToZero) {
    const auto ds = numeric_table({{1.0, 10.0}, {3.0, 30.0}, {5.0, 20.0}});
    const auto p = fit_preprocess(ds);
    const auto probe = numeric_table({{3.0, 20.0}});
    for (double v : apply_preprocess(p, probe).x.data) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Preprocess, AllMissingColumnNamed) {
    auto ds = numeric_table({{1.0, Cell{}}, {2.0, Cell{}}});
    try {
        fit_preprocess(ds);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("'n1'"), std::string::npos);
    }
}

TEST(Preprocess, SchemaMismatch) {
    const auto p = fit_preprocess(numeric_table({{1.0}, {2.0}}));
    EXPECT_THROW(apply_preprocess(p, numeric_table({{1.0, 2.0}})), ContractError);
    auto renamed = numeric_table({{1.0}});
    renamed.columns[0].name = "other";
    EXPECT_THROW(apply_preprocess(p, renamed), ContractError);
    EXPECT_THROW(fit_preprocess(numeric_table({{1.0}})), ContractError);
}

TEST(Preprocess, UnseenCategoryIsZeroBlock) {
    const auto p = fit_preprocess(category_table({std::string("A"), std::string("B")}));
    auto probe = category_table({std::string("C")});
    probe.columns[0].categories.push_back("C");
    const auto enc = apply_preprocess(p, probe);
    EXPECT_EQ(enc.unseen_categories, 1u);
    EXPECT_EQ(enc.x.data, (std::vector<double>{0, 0}));
}

TEST(Preprocess, FitReadsOnlyItsRows) {
    const auto full = numeric_table({{1.0}, {2.0}, {3.0}, {100.0}});
    const std::vector<std::size_t> train{0, 1, 2};
    auto mutated = full;
    mutated.rows[3][0] = -5.0;
    EXPECT_EQ(fit_preprocess(full.subset(train)).digest(), fit_preprocess(mutated.subset(train)).digest());
}

TEST(Csv, ParsesWithSchema) {
    const auto schema = parse_schema(nlohmann::json::parse(R"({
        "columns": [{"name": "age", "kind": "numeric"},
                    {"name": "sex", "kind": "categorical", "categories": ["F", "M"]}],
        "label_column": "subtype", "classes": ["adenocarcinoma", "squamous"],
        "id_column": "id", "missing_marker": "NA"})"));
    std::istringstream csv("id,sex,age,subtype\np1,F,61.5,squamous\np2,NA,\"70\",adenocarcinoma\n");
    const auto ds = parse_tabular_csv(csv, schema);
    ASSERT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds.row_ids, (std::vector<std::string>{"p1", "p2"}));
    EXPECT_EQ(ds.labels, (std::vector<int>{1, 0}));
    EXPECT_EQ(std::get<double>(ds.rows[0][0]), 61.5);
    EXPECT_TRUE(is_missing(ds.rows[1][1]));

    std::istringstream bad("id,sex,age,subtype\np1,F,abc,squamous\n");
    EXPECT_THROW(parse_tabular_csv(bad, schema), DataError);
    std::istringstream ragged("id,sex,age,subtype\np1,F\n");
    EXPECT_THROW(parse_tabular_csv(ragged, schema), DataError);
    std::istringstream unknown("id,sex,age,subtype\np1,F,1,other\n");
    EXPECT_THROW(parse_tabular_csv(unknown, schema), DataError);
    EXPECT_THROW(parse_schema(nlohmann::json::parse(R"({"columns": []})")), DataError);
}

TEST(Smote, BalancesTenFour) {
    std::vector<int> labels;
    const Matrix x = minority_majority(10, 4, 1, labels);
    const auto out = smote(x, labels, 3, 7);
    EXPECT_EQ(out.x.rows, 20u);
    EXPECT_EQ(std::count(out.labels.begin(), out.labels.end(), 0), 10);
    EXPECT_EQ(std::count(out.labels.begin(), out.labels.end(), 1), 10);
    for (std::size_t i = 0; i < x.data.size(); ++i) EXPECT_EQ(out.x.data[i], x.data[i]);
}

TEST(Smote, SyntheticRowsAreConvexCombinations) {
    std::vector<int> labels;
    const Matrix x = minority_majority(20, 6, 2, labels);
    const auto out = smote(x, labels, 5, 8);
    std::vector<std::size_t> minority;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == 1) minority.push_back(i);
    for (std::size_t r = x.rows; r < out.x.rows; ++r) {
        EXPECT_EQ(out.labels[r], 1);
        EXPECT_TRUE(on_minority_segment(out.x.row(r), x, minority, 1e-9)) << "row " << r;
    }
}

TEST(Smote, BalancedInputUnchanged) {
    std::vector<int> labels;
    const Matrix x = minority_majority(5, 5, 3, labels);
    const auto out = smote(x, labels, 3, 1);
    EXPECT_EQ(out.x, x);
    EXPECT_EQ(out.labels, labels);
}

TEST(Smote, ThreeClassesAndDeterminism) {
    Matrix x(0, 0);
    std::vector<int> labels;
    Rng rng(4);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 3 + 4 * c; ++i) {
            const std::vector<double> row{rng.normal() + c, rng.normal()};
            x.append_row(row);
            labels.push_back(c);
        }
    const auto a = smote(x, labels, 5, 11), b = smote(x, labels, 5, 11);
    EXPECT_EQ(a.digest(), b.digest());
    for (int c = 0; c < 3; ++c) EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), c), 11);
    EXPECT_NE(smote(x, labels, 5, 12).digest(), a.digest());
}

TEST(Smote, Errors) {
    Matrix x(4, 1);
    const std::vector<int> one_minority{0, 0, 0, 1};
    EXPECT_THROW(smote(x, one_minority, 2, 0), DataError);
    const std::vector<int> ok{0, 0, 1, 1};
    EXPECT_THROW(smote(x, ok, 0, 0), ContractError);
}

TEST(Booster, PlantedFeatureRanksFirst) {
    std::vector<int> labels;
    const Matrix x = lungfuse::testing::planted_signal(200, 4, 1, labels);
    const auto r = boosted_importance(x, labels);
    EXPECT_EQ(r.ranking.front(), 0u);
    const auto oracle = lungfuse::testing::best_first_stump(x, labels);
    ASSERT_TRUE(r.first_split.has_value());
    EXPECT_EQ(r.first_split->feature, oracle.feature);
    EXPECT_DOUBLE_EQ(r.first_split->threshold, oracle.threshold);
    EXPECT_NEAR(r.first_split->gain, oracle.gain, 1e-9);
    for (double g : r.gains) EXPECT_GE(g, 0.0);
}

TEST(Booster, ConstantFeaturesGiveZeroGain) {
    Matrix x(20, 3, 1.5);
    std::vector<int> labels(20);
    for (int i = 0; i < 20; ++i) labels[i] = i % 2;
    const auto r = boosted_importance(x, labels);
    EXPECT_EQ(r.gains, std::vector<double>(3, 0.0));
    EXPECT_TRUE(r.models.front().trees.empty());
    EXPECT_FALSE(r.first_split.has_value());
}

TEST(Booster, DuplicatedNoiseKeepsTopRank) {
    std::vector<int> labels;
    const Matrix x = lungfuse::testing::planted_signal(200, 4, 2, labels);
    const std::vector<std::size_t> cols{0, 1, 2, 3, 4, 3};
    EXPECT_EQ(boosted_importance(x.select_cols(cols), labels).ranking.front(), 0u);
}

TEST(Booster, RowPermutationInvariant) {
    std::vector<int> labels;
    const Matrix x = lungfuse::testing::planted_signal(60, 3, 3, labels);
    std::vector<std::size_t> perm(60);
    for (std::size_t i = 0; i < 60; ++i) perm[i] = (i * 7) % 60;
    std::vector<int> plabels;
    for (auto i : perm) plabels.push_back(labels[i]);
    const auto a = boosted_importance(x, labels);
    const auto b = boosted_importance(x.select_rows(perm), plabels);
    for (std::size_t f = 0; f < a.gains.size(); ++f) EXPECT_NEAR(a.gains[f], b.gains[f], 1e-9 * (1 + a.gains[f]));
    EXPECT_EQ(a.ranking, b.ranking);
}

TEST(Booster, Errors) {
    std::vector<int> labels(20, 1);
    EXPECT_THROW(boosted_importance(Matrix(20, 2), labels), DataError);
    std::vector<int> few{0, 1, 0};
    EXPECT_THROW(boosted_importance(Matrix(3, 2), few), ContractError);
}

TEST(Booster, Defaults) {
    const BoostConfig c;
    EXPECT_EQ(c.learning_rate, 0.1);
    EXPECT_EQ(c.max_depth, 5);
    EXPECT_EQ(c.n_estimators, 100);
    EXPECT_EQ(c.lambda, 1.0);
}

TEST(SelectFeatures, Examples) {
    EXPECT_EQ(select_features(std::vector<double>{0.5, 0.9, 0.1}, 2), (std::vector<std::size_t>{1, 0}));
    EXPECT_EQ(select_features(std::vector<double>{0.3, 0.3, 0.3}, 1), (std::vector<std::size_t>{0}));
    EXPECT_EQ(select_features(std::vector<double>{0.2, 0.7, 0.7}, 3), (std::vector<std::size_t>{1, 2, 0}));
    EXPECT_THROW(select_features(std::vector<double>{0.2}, 0), ContractError);
    EXPECT_THROW(select_features(std::vector<double>{0.2}, 2), ContractError);
}

TEST(ColumnScaler, StandardizesColumns) {
    Matrix x(3, 2);
    x.data = {1, 5, 2, 5, 3, 5};
    const auto s = ColumnScaler::fit(x);
    const Matrix y = s.apply(x);
    EXPECT_NEAR(y(0, 0), -std::sqrt(1.5), 1e-12);
    EXPECT_EQ(y(1, 1), 0.0);
}
