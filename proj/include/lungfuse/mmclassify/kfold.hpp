#pragma once

#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "lungfuse/core/parallel.hpp"
#include "lungfuse/mmclassify/logreg.hpp"
#include "lungfuse/mmclassify/metrics.hpp"
#include "lungfuse/mmclassify/mlp.hpp"
#include "lungfuse/tabular/boost.hpp"
#include "lungfuse/tabular/preprocess.hpp"
#include "lungfuse/tabular/smote.hpp"

namespace lungfuse {

/// Which feature blocks a model sees.
enum class InputConfig { tabular_only, ct_only, fused, multimodal };

inline std::string to_string(InputConfig c) {
    switch (c) {
        case InputConfig::tabular_only: return "tabular-only";
        case InputConfig::ct_only: return "ct-only";
        case InputConfig::fused: return "fused";
        case InputConfig::multimodal: return "multimodal";
    }
    return "?";
}

inline InputConfig parse_input_config(const std::string& s) {
    for (auto c : {InputConfig::tabular_only, InputConfig::ct_only, InputConfig::fused, InputConfig::multimodal})
        if (to_string(c) == s) return c;
    throw ConfigError("unknown input configuration '" + s + "' (expected tabular-only, ct-only, fused, multimodal)");
}

inline bool uses_tabular(InputConfig c) { return c == InputConfig::tabular_only || c == InputConfig::multimodal; }

/// One row per patient. Feature blocks a configuration does not use may be empty.
struct MultiModalData {
    TabularDataset tabular;
    Matrix ct_features;
    Matrix fused_features;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::vector<std::string> ids;

    std::size_t size() const { return labels.size(); }
};

struct ClassifierConfig {
    enum class Model { mlp, logreg };
    Model model = Model::mlp;
    MLPSpec mlp;
    TrainConfig train = [] {
        TrainConfig t;
        t.epochs = 600;
        return t;
    }();
    double logreg_lr = 0.1;
    int logreg_epochs = 300;
    BoostConfig boost;
    std::size_t top_k = 16;  // tabular features kept after boosted-importance ranking
    bool use_smote = true;
    int smote_k = 5;
    unsigned threads = 1;  // folds evaluated concurrently
};

inline std::string to_string(ClassifierConfig::Model m) { return m == ClassifierConfig::Model::mlp ? "mlp" : "logreg"; }

/// Stratified fold ids: each class is shuffled with the seed and dealt round-robin, continuing the
/// deal position from one class to the next so fold sizes differ by at most one.
inline std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
    if (k < 2) throw ContractError("stratified_folds: k must be >= 2");
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
    for (const auto& [cls, rows] : members)
        if (rows.size() < static_cast<std::size_t>(k))
            throw DataError("stratified_folds: class " + std::to_string(cls) + " has " + std::to_string(rows.size()) +
                            " rows, fewer than k=" + std::to_string(k));
    Rng rng(Fnv1a().text("lungfuse-folds").u64(seed).value());
    std::vector<int> fold(labels.size(), -1);
    std::size_t deal = 0;
    for (auto& [cls, rows] : members) {
        rng.shuffle(rows);
        for (std::size_t r : rows) fold[r] = static_cast<int>(deal++ % static_cast<std::size_t>(k));
    }
    return fold;
}

inline std::uint64_t fold_assignment_hash(const std::vector<int>& folds) {
    Fnv1a h;
    for (int f : folds) h.u64(static_cast<std::uint64_t>(f));
    return h.value();
}

/// Hashes of everything a fold learned; used for the leakage audit.
struct FoldDigests {
    std::uint64_t preprocessor = 0;
    std::uint64_t smote = 0;
    std::uint64_t features = 0;
    std::uint64_t weights = 0;

    friend bool operator==(const FoldDigests&, const FoldDigests&) = default;
};

struct FoldResult {
    std::vector<std::size_t> test_rows;
    std::vector<int> predictions;
    ConfusionMatrix confusion;
    Scores scores;
    std::vector<std::string> selected_features;
    FoldDigests digests;
};

struct MetricsReport {
    std::string input;
    std::string model;
    std::vector<std::string> class_names;
    int k = 0;
    std::uint64_t seed = 0;
    std::uint64_t fold_hash = 0;
    std::vector<FoldResult> folds;
    ConfusionMatrix confusion;  // summed over folds
    MeanStd accuracy, precision, recall, f1;
};

namespace kfold_detail {

inline std::vector<std::size_t> rows_where(const std::vector<int>& folds, int f, bool equal) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < folds.size(); ++i)
        if ((folds[i] == f) == equal) out.push_back(i);
    return out;
}

inline const Matrix& image_block(const MultiModalData& d, InputConfig input) {
    static const Matrix empty;
    switch (input) {
        case InputConfig::ct_only: return d.ct_features;
        case InputConfig::fused:
        case InputConfig::multimodal: return d.fused_features;
        default: return empty;
    }
}

inline void check_modalities(const MultiModalData& d, InputConfig input) {
    if (uses_tabular(input) && (d.tabular.columns.empty() || d.tabular.size() != d.size()))
        throw ConfigError("input '" + to_string(input) + "' needs tabular features but the dataset has none");
    if (input == InputConfig::ct_only && (d.ct_features.cols == 0 || d.ct_features.rows != d.size()))
        throw ConfigError("input 'ct-only' needs CT image features but the dataset has none");
    if ((input == InputConfig::fused || input == InputConfig::multimodal) &&
        (d.fused_features.cols == 0 || d.fused_features.rows != d.size()))
        throw ConfigError("input '" + to_string(input) + "' needs fused image features but the dataset has none");
}

}  // namespace kfold_detail

/// Fits every learned component on `train` only and evaluates on `test`.
inline FoldResult run_fold(const MultiModalData& d, InputConfig input, const std::vector<std::size_t>& train,
                           const std::vector<std::size_t>& test, const ClassifierConfig& cfg, std::uint64_t fold_seed) {
    const int n_classes = static_cast<int>(std::max<std::size_t>(d.class_names.size(), 2));
    std::vector<int> y_train, y_test;
    for (auto r : train) y_train.push_back(d.labels[r]);
    for (auto r : test) y_test.push_back(d.labels[r]);

    FoldResult res;
    res.test_rows = test;
    Fnv1a prep_hash;
    Matrix tab_train, tab_test;
    std::vector<std::string> tab_names;
    if (uses_tabular(input)) {
        const auto fit = fit_preprocess(d.tabular.subset(train));
        prep_hash.u64(fit.digest());
        tab_train = apply_preprocess(fit, d.tabular.subset(train)).x;
        tab_test = apply_preprocess(fit, d.tabular.subset(test)).x;
        tab_names = fit.feature_names();
    }
    Matrix img_train, img_test;
    const Matrix& img = kfold_detail::image_block(d, input);
    if (img.cols > 0) {
        const auto scaler = ColumnScaler::fit(img.select_rows(train));
        prep_hash.u64(scaler.digest());
        img_train = scaler.apply(img.select_rows(train));
        img_test = scaler.apply(img.select_rows(test));
    }
    res.digests.preprocessor = prep_hash.value();

    const std::size_t tab_w = tab_train.cols;
    SmoteResult bal{hconcat(tab_train, img_train), y_train, train.size()};
    if (cfg.use_smote) bal = smote(bal.x, y_train, cfg.smote_k, Fnv1a().text("smote").u64(fold_seed).value());
    res.digests.smote = bal.digest();

    std::vector<std::size_t> keep;
    if (tab_w > 0) {
        std::vector<std::size_t> tab_cols(tab_w);
        std::iota(tab_cols.begin(), tab_cols.end(), 0);
        const auto report = boosted_importance(bal.x.select_cols(tab_cols), bal.labels, cfg.boost);
        keep = select_features(report, std::min(cfg.top_k, tab_w));
        std::sort(keep.begin(), keep.end());
        for (auto c : keep) res.selected_features.push_back(tab_names[c]);
    }
    for (std::size_t c = tab_w; c < bal.x.cols; ++c) keep.push_back(c);
    Fnv1a feat_hash;
    for (auto c : keep) feat_hash.u64(c);
    for (const auto& n : res.selected_features) feat_hash.text(n);
    res.digests.features = feat_hash.value();

    const Matrix x_train = bal.x.select_cols(keep);
    const Matrix x_test = hconcat(tab_test, img_test).select_cols(keep);
    if (cfg.model == ClassifierConfig::Model::mlp) {
        TrainConfig tc = cfg.train;
        tc.seed = Fnv1a().text("mlp").u64(fold_seed).value();
        const auto model = train_mlp(x_train, bal.labels, cfg.mlp, tc, n_classes);
        res.digests.weights = model.digest();
        res.predictions = model.predict(x_test);
    } else {
        const auto model = train_logreg(x_train, bal.labels, cfg.logreg_lr, cfg.logreg_epochs, fold_seed, n_classes);
        res.digests.weights = model.digest();
        res.predictions = model.predict(x_test);
    }
    res.confusion = ConfusionMatrix(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < test.size(); ++i) res.confusion.add(y_test[i], res.predictions[i]);
    res.scores = score(res.confusion);
    return res;
}

inline MetricsReport kfold_evaluate(const MultiModalData& d, InputConfig input, int k, const ClassifierConfig& cfg,
                                    std::uint64_t seed) {
    kfold_detail::check_modalities(d, input);
    if (d.size() == 0) throw DataError("kfold_evaluate: empty dataset");
    const auto folds = stratified_folds(d.labels, k, seed);
    MetricsReport rep;
    rep.input = to_string(input);
    rep.model = to_string(cfg.model);
    rep.class_names = d.class_names;
    rep.k = k;
    rep.seed = seed;
    rep.fold_hash = fold_assignment_hash(folds);
    rep.folds.resize(static_cast<std::size_t>(k));
    parallel_for(static_cast<std::size_t>(k), cfg.threads, [&](std::size_t f) {
        const int fi = static_cast<int>(f);
        rep.folds[f] = run_fold(d, input, kfold_detail::rows_where(folds, fi, false),
                                kfold_detail::rows_where(folds, fi, true), cfg,
                                Fnv1a().text("fold").u64(seed).u64(f).value());
    });
    rep.confusion = ConfusionMatrix(rep.folds.front().confusion.n_classes);
    std::vector<double> acc, pre, rec, f1;
    for (const auto& f : rep.folds) {
        rep.confusion += f.confusion;
        acc.push_back(f.scores.accuracy);
        pre.push_back(f.scores.precision);
        rec.push_back(f.scores.recall);
        f1.push_back(f.scores.f1);
    }
    rep.accuracy = mean_std(acc);
    rep.precision = mean_std(pre);
    rep.recall = mean_std(rec);
    rep.f1 = mean_std(f1);
    return rep;
}

inline nlohmann::json to_json(const ConfusionMatrix& cm) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t t = 0; t < cm.n_classes; ++t) {
        nlohmann::json r = nlohmann::json::array();
        for (std::size_t p = 0; p < cm.n_classes; ++p) r.push_back(cm.at(t, p));
        rows.push_back(r);
    }
    return rows;
}

inline nlohmann::json to_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

inline nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json folds = nlohmann::json::array();
    for (std::size_t i = 0; i < r.folds.size(); ++i) {
        const auto& f = r.folds[i];
        folds.push_back({{"fold", i},
                         {"test_rows", f.test_rows.size()},
                         {"confusion_matrix", to_json(f.confusion)},
                         {"accuracy", f.scores.accuracy},
                         {"precision", f.scores.precision},
                         {"recall", f.scores.recall},
                         {"f1", f.scores.f1},
                         {"selected_features", f.selected_features},
                         {"digests",
                          {{"preprocessor", Fnv1a::to_hex(f.digests.preprocessor)},
                           {"smote", Fnv1a::to_hex(f.digests.smote)},
                           {"features", Fnv1a::to_hex(f.digests.features)},
                           {"weights", Fnv1a::to_hex(f.digests.weights)}}}});
    }
    return {{"input", r.input},
            {"model", r.model},
            {"class_names", r.class_names},
            {"k", r.k},
            {"seed", r.seed},
            {"fold_assignment_hash", Fnv1a::to_hex(r.fold_hash)},
            {"averaging", "macro"},
            {"spread", "sample standard deviation over folds"},
            {"confusion_matrix", to_json(r.confusion)},
            {"accuracy", to_json(r.accuracy)},
            {"precision", to_json(r.precision)},
            {"recall", to_json(r.recall)},
            {"f1", to_json(r.f1)},
            {"folds", folds}};
}

}  // namespace lungfuse
