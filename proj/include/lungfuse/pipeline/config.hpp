#pragma once

#include <filesystem>
#include <set>
#include <string>

#include <json.hpp>

#include "lungfuse/denoise/train.hpp"
#include "lungfuse/fusion/fuse.hpp"
#include "lungfuse/imgcore/lung_mask.hpp"
#include "lungfuse/mmclassify/kfold.hpp"
#include "lungfuse/phantom/describe.hpp"
#include "lungfuse/phantom/generator.hpp"

namespace lungfuse {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

/// Every tunable of the full pipeline. Field defaults are the documented defaults.
struct PipelineConfig {
    struct Phantom {
        PhantomConfig generator;
        std::string dataset_dir;  // when set, this dataset is used instead of generating one
    } phantom;

    struct Denoise {
        bool enabled = true;
        int train_images = 24;  // clean phantom PET images the denoiser learns from
        int epochs = 100;
        int batch_size = 4;
        double learning_rate = 0.001;
        double noise_sigma = 0.1;
        std::uint64_t seed = 42;
    } denoise;

    struct Fusion {
        WaveletFamily family = WaveletFamily::haar;
        int levels = 1;
        std::string ll_rule = "average";
        std::string detail_rule = "maxabs";
        bool register_pet = true;
        bool equalize_ct = false;
        bool lung_field_mask = true;  // restrict image features to the lung field
        double lung_threshold = kDefaultLungThreshold;
        int feature_levels = 2;

        FusionRule rule() const {
            FusionRule r;
            parse_ll_rule(ll_rule, r);
            r.detail_rule = parse_detail_rule(detail_rule);
            r.validate();
            return r;
        }
    } fusion;

    struct Tabular {
        std::size_t top_k = 16;
        bool smote = true;
        int smote_k = 5;
        BoostConfig booster;
    } tabular;

    struct Classify {
        std::string model = "mlp";
        MLPSpec mlp;
        double learning_rate = 0.001;
        int batch_size = 96;
        int epochs = 600;
        double logreg_learning_rate = 0.1;
        int logreg_epochs = 300;
    } classify;

    struct Evaluate {
        int k = 5;
        std::uint64_t seed = 42;
    } evaluate;

    struct Run {
        std::string output_dir = "lungfuse_out";
        std::string cache_dir;  // empty: <output_dir>/cache
        unsigned threads = 1;
    } run;

    ClassifierConfig classifier() const {
        ClassifierConfig c;
        if (classify.model == "mlp")
            c.model = ClassifierConfig::Model::mlp;
        else if (classify.model == "logreg")
            c.model = ClassifierConfig::Model::logreg;
        else
            throw ConfigError("classify.model: expected mlp or logreg, got '" + classify.model + "'");
        c.mlp = classify.mlp;
        c.train.learning_rate = classify.learning_rate;
        c.train.batch_size = classify.batch_size;
        c.train.epochs = classify.epochs;
        c.logreg_lr = classify.logreg_learning_rate;
        c.logreg_epochs = classify.logreg_epochs;
        c.boost = tabular.booster;
        c.top_k = tabular.top_k;
        c.use_smote = tabular.smote;
        c.smote_k = tabular.smote_k;
        c.threads = run.threads;
        return c;
    }

    std::filesystem::path cache_path() const {
        return run.cache_dir.empty() ? std::filesystem::path(run.output_dir) / "cache"
                                     : std::filesystem::path(run.cache_dir);
    }

    /// Range checks that do not depend on data. ConfigError names the offending key.
    void validate() const {
        auto fail = [](const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); };
        try {
            phantom.generator.validate();
        } catch (const ContractError& e) {
            throw ConfigError(std::string("phantom: ") + e.what());
        }
        if (denoise.train_images < 1) fail("denoise.train_images", "must be >= 1");
        if (denoise.epochs < 0) fail("denoise.epochs", "must be >= 0");
        if (denoise.batch_size < 1) fail("denoise.batch_size", "must be >= 1");
        if (!(denoise.learning_rate > 0.0)) fail("denoise.learning_rate", "must be > 0");
        if (!(denoise.noise_sigma >= 0.0)) fail("denoise.noise_sigma", "must be >= 0");
        if (fusion.levels < 1) fail("fusion.levels", "must be >= 1");
        if (fusion.feature_levels < 1) fail("fusion.feature_levels", "must be >= 1");
        if (!(fusion.lung_threshold > 0.0 && fusion.lung_threshold < 1.0)) fail("fusion.lung_threshold", "must be in (0,1)");
        try {
            (void)fusion.rule();
        } catch (const ContractError& e) {
            throw ConfigError(std::string("fusion: ") + e.what());
        }
        try {
            classify.mlp.validate();
        } catch (const ContractError& e) {
            throw ConfigError(std::string("classify: ") + e.what());
        }
        if (tabular.top_k < 1) fail("tabular.top_k", "must be >= 1");
        if (tabular.smote_k < 1) fail("tabular.smote_k", "must be >= 1");
        if (!(tabular.booster.learning_rate > 0.0)) fail("tabular.booster.learning_rate", "must be > 0");
        if (tabular.booster.max_depth < 1) fail("tabular.booster.max_depth", "must be >= 1");
        if (tabular.booster.n_estimators < 1) fail("tabular.booster.n_estimators", "must be >= 1");
        if (!(classify.learning_rate > 0.0)) fail("classify.learning_rate", "must be > 0");
        if (classify.batch_size < 1) fail("classify.batch_size", "must be >= 1");
        if (classify.epochs < 0) fail("classify.epochs", "must be >= 0");
        (void)classifier();
        if (evaluate.k < 2) fail("evaluate.k", "must be >= 2");
        if (run.output_dir.empty()) fail("run.output_dir", "must not be empty");
    }
};

namespace config_detail {

/// Reads keys from one JSON object, remembering which were consumed so that
/// leftovers can be reported as unknown.
class Section {
public:
    Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(name() + ": expected a JSON object");
    }

    template <class T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) throw ConfigError(qualified(key) + ": expected true or false");
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_integer()) throw ConfigError(qualified(key) + ": expected an integer");
                if (std::is_unsigned_v<T> && !it->is_number_unsigned())
                    throw ConfigError(qualified(key) + ": expected a non-negative integer");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number()) throw ConfigError(qualified(key) + ": expected a number");
            } else {
                if (!it->is_string()) throw ConfigError(qualified(key) + ": expected a string");
            }
            out = it->get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(qualified(key) + ": " + e.what());
        }
    }

    Section child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        static const nlohmann::json empty = nlohmann::json::object();
        return Section(it == j_.end() ? empty : *it, qualified(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.contains(it.key())) throw ConfigError("unknown config key '" + qualified(it.key()) + "'");
    }

private:
    std::string name() const { return path_.empty() ? "config" : path_; }
    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace config_detail

/// Builds a config from JSON. Missing keys keep their defaults; unknown keys and
/// type mismatches raise ConfigError naming the key.
inline PipelineConfig parse_pipeline_config(const nlohmann::json& j) {
    PipelineConfig c;
    config_detail::Section root(j, "");

    auto ph = root.child("phantom");
    auto& g = c.phantom.generator;
    ph.read("n_patients", g.n_patients);
    ph.read("image_size", g.image_size);
    ph.read("class_balance", g.class_balance);
    ph.read("noise_sigma", g.noise_sigma);
    ph.read("registration_jitter", g.registration_jitter);
    ph.read("signal_strength", g.signal_strength);
    ph.read("missing_rate", g.missing_rate);
    ph.read("seed", g.seed);
    ph.read("dataset_dir", c.phantom.dataset_dir);
    ph.finish();

    auto dn = root.child("denoise");
    dn.read("enabled", c.denoise.enabled);
    dn.read("train_images", c.denoise.train_images);
    dn.read("epochs", c.denoise.epochs);
    dn.read("batch_size", c.denoise.batch_size);
    dn.read("learning_rate", c.denoise.learning_rate);
    dn.read("noise_sigma", c.denoise.noise_sigma);
    dn.read("seed", c.denoise.seed);
    dn.finish();

    auto fu = root.child("fusion");
    std::string family(to_string(c.fusion.family));
    fu.read("family", family);
    try {
        c.fusion.family = parse_wavelet_family(family);
    } catch (const ContractError& e) {
        throw ConfigError(std::string("fusion.family: ") + e.what());
    }
    fu.read("levels", c.fusion.levels);
    fu.read("ll_rule", c.fusion.ll_rule);
    fu.read("detail_rule", c.fusion.detail_rule);
    fu.read("register", c.fusion.register_pet);
    fu.read("equalize_ct", c.fusion.equalize_ct);
    fu.read("lung_field_mask", c.fusion.lung_field_mask);
    fu.read("lung_threshold", c.fusion.lung_threshold);
    fu.read("feature_levels", c.fusion.feature_levels);
    fu.finish();

    auto tb = root.child("tabular");
    tb.read("top_k", c.tabular.top_k);
    tb.read("smote", c.tabular.smote);
    tb.read("smote_k", c.tabular.smote_k);
    auto bo = tb.child("booster");
    bo.read("learning_rate", c.tabular.booster.learning_rate);
    bo.read("max_depth", c.tabular.booster.max_depth);
    bo.read("n_estimators", c.tabular.booster.n_estimators);
    bo.read("lambda", c.tabular.booster.lambda);
    bo.read("min_child_weight", c.tabular.booster.min_child_weight);
    bo.finish();
    tb.finish();

    auto cl = root.child("classify");
    cl.read("model", c.classify.model);
    cl.read("hidden1", c.classify.mlp.hidden1);
    cl.read("hidden2", c.classify.mlp.hidden2);
    cl.read("dropout", c.classify.mlp.dropout);
    cl.read("learning_rate", c.classify.learning_rate);
    cl.read("batch_size", c.classify.batch_size);
    cl.read("epochs", c.classify.epochs);
    cl.read("logreg_learning_rate", c.classify.logreg_learning_rate);
    cl.read("logreg_epochs", c.classify.logreg_epochs);
    cl.finish();

    auto ev = root.child("evaluate");
    ev.read("k", c.evaluate.k);
    ev.read("seed", c.evaluate.seed);
    ev.finish();

    auto rn = root.child("run");
    rn.read("output_dir", c.run.output_dir);
    rn.read("cache_dir", c.run.cache_dir);
    rn.read("threads", c.run.threads);
    rn.finish();

    root.finish();
    c.validate();
    return c;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON at byte " + std::to_string(e.byte));
    }
    return parse_pipeline_config(j);
}

/// Fully resolved config; parse_pipeline_config(to_json(c)) reproduces c.
inline nlohmann::json to_json(const PipelineConfig& c) {
    const auto& g = c.phantom.generator;
    return {
        {"phantom",
         {{"n_patients", g.n_patients},
          {"image_size", g.image_size},
          {"class_balance", g.class_balance},
          {"noise_sigma", g.noise_sigma},
          {"registration_jitter", g.registration_jitter},
          {"signal_strength", g.signal_strength},
          {"missing_rate", g.missing_rate},
          {"seed", g.seed},
          {"dataset_dir", c.phantom.dataset_dir}}},
        {"denoise",
         {{"enabled", c.denoise.enabled},
          {"train_images", c.denoise.train_images},
          {"epochs", c.denoise.epochs},
          {"batch_size", c.denoise.batch_size},
          {"learning_rate", c.denoise.learning_rate},
          {"noise_sigma", c.denoise.noise_sigma},
          {"seed", c.denoise.seed}}},
        {"fusion",
         {{"family", std::string(to_string(c.fusion.family))},
          {"levels", c.fusion.levels},
          {"ll_rule", c.fusion.ll_rule},
          {"detail_rule", c.fusion.detail_rule},
          {"register", c.fusion.register_pet},
          {"equalize_ct", c.fusion.equalize_ct},
          {"lung_field_mask", c.fusion.lung_field_mask},
          {"lung_threshold", c.fusion.lung_threshold},
          {"feature_levels", c.fusion.feature_levels}}},
        {"tabular",
         {{"top_k", c.tabular.top_k},
          {"smote", c.tabular.smote},
          {"smote_k", c.tabular.smote_k},
          {"booster",
           {{"learning_rate", c.tabular.booster.learning_rate},
            {"max_depth", c.tabular.booster.max_depth},
            {"n_estimators", c.tabular.booster.n_estimators},
            {"lambda", c.tabular.booster.lambda},
            {"min_child_weight", c.tabular.booster.min_child_weight}}}}},
        {"classify",
         {{"model", c.classify.model},
          {"hidden1", c.classify.mlp.hidden1},
          {"hidden2", c.classify.mlp.hidden2},
          {"dropout", c.classify.mlp.dropout},
          {"learning_rate", c.classify.learning_rate},
          {"batch_size", c.classify.batch_size},
          {"epochs", c.classify.epochs},
          {"logreg_learning_rate", c.classify.logreg_learning_rate},
          {"logreg_epochs", c.classify.logreg_epochs}}},
        {"evaluate", {{"k", c.evaluate.k}, {"seed", c.evaluate.seed}}},
        {"run", {{"output_dir", c.run.output_dir}, {"cache_dir", c.run.cache_dir}, {"threads", c.run.threads}}},
    };
}

}  // namespace lungfuse
