#pragma once

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lungfuse/denoise/weights_io.hpp"
#include "lungfuse/fusion/quality.hpp"
#include "lungfuse/fusion/register.hpp"
#include "lungfuse/imgcore/intensity.hpp"
#include "lungfuse/mmclassify/compare.hpp"
#include "lungfuse/mmclassify/features.hpp"
#include "lungfuse/pipeline/config.hpp"
#include "lungfuse/pipeline/store.hpp"

#ifndef LUNGFUSE_VERSION
#define LUNGFUSE_VERSION "0.1.0"
#endif

namespace lungfuse {

inline constexpr const char* kVersion = LUNGFUSE_VERSION;

/// Rethrows the active exception with the stage name and a remediation hint
/// prepended, keeping its category so exit codes stay meaningful.
[[noreturn]] inline void rethrow_in_stage(const std::string& stage, const std::string& hint) {
    auto msg = [&](const char* what) { return "stage '" + stage + "': " + what + " (hint: " + hint + ")"; };
    try {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError(msg(e.what()));
    } catch (const ContractError& e) {
        throw ContractError(msg(e.what()));
    } catch (const FormatError& e) {
        throw FormatError(msg(e.what()), e.offset());
    } catch (const NumericalError& e) {
        throw NumericalError(msg(e.what()));
    } catch (const DataError& e) {
        throw DataError(msg(e.what()));
    } catch (const std::exception& e) {
        throw DataError(msg(e.what()));
    }
}

struct StageRecord {
    std::string name;
    std::uint64_t key = 0;
    bool cache_hit = false;
};

/// Runs stages through the cache. Hit/miss notices go to `log` (stderr by
/// default) and never into the report bundle.
class StageRunner {
public:
    StageRunner(std::filesystem::path cache_root, std::ostream* log = &std::cerr) : cache_(std::move(cache_root)), log_(log) {}

    /// Returns the stage's output directory, producing it first on a miss.
    std::filesystem::path run(const std::string& name, std::uint64_t key, const std::string& hint,
                              const std::function<void(const std::filesystem::path&)>& produce) {
        const bool hit = cache_.has(name, key);
        records_.push_back({name, key, hit});
        if (log_) *log_ << "[lungfuse] " << name << ": " << (hit ? "cache hit" : "cache miss") << " (" << Fnv1a::to_hex(key) << ")\n";
        if (hit) return cache_.dir(name, key);
        try {
            produce(cache_.begin(name, key));
            return cache_.commit(name, key);
        } catch (...) {
            rethrow_in_stage(name, hint);
        }
    }

    /// Work that is not cached (reading inputs, writing the bundle) with the same error wrapping.
    template <class F>
    auto step(const std::string& name, const std::string& hint, F&& f) {
        try {
            return f();
        } catch (...) {
            rethrow_in_stage(name, hint);
        }
    }

    const std::vector<StageRecord>& records() const { return records_; }

private:
    StageCache cache_;
    std::ostream* log_;
    std::vector<StageRecord> records_;
};

/// Paired images, tabular rows and labels of a dataset directory, in manifest order.
struct LoadedDataset {
    std::vector<std::string> ids;
    std::vector<ImageGray> ct;
    std::vector<ImageGray> pet;
    TabularDataset tabular;  // reordered to manifest order
    std::vector<int> labels;
    std::vector<std::string> class_names;
    nlohmann::json ground_truth;  // null when the directory has none
    std::uint64_t digest = 0;     // content hash of every input file
};

inline LoadedDataset load_dataset(const std::filesystem::path& dir) {
    LoadedDataset ds;
    Fnv1a h;
    auto hash_file = [&](const std::filesystem::path& p) {
        const auto bytes = read_file_bytes(p);
        h.text(p.filename().string()).u64(bytes.size()).bytes(bytes.data(), bytes.size());
    };
    const auto manifest = read_json_file(dir / "manifest.json");
    hash_file(dir / "manifest.json");
    const auto schema = read_schema(dir / "schema.json");
    hash_file(dir / "schema.json");
    const auto table = read_tabular(dir / "clinical.csv", schema);
    hash_file(dir / "clinical.csv");
    ds.class_names = schema.classes;

    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < table.row_ids.size(); ++i) by_id[table.row_ids[i]] = i;
    std::vector<std::size_t> order;
    try {
        for (const auto& row : manifest.at("rows")) {
            const auto id = row.at("id").get<std::string>();
            const auto tab_id = row.at("tabular_row_id").get<std::string>();
            const auto label = row.at("label").get<std::string>();
            auto it = by_id.find(tab_id);
            if (it == by_id.end()) throw DataError("manifest row '" + id + "': no tabular row '" + tab_id + "'");
            const auto cls = std::find(ds.class_names.begin(), ds.class_names.end(), label);
            if (cls == ds.class_names.end()) throw DataError("manifest row '" + id + "': unknown label '" + label + "'");
            const int y = static_cast<int>(cls - ds.class_names.begin());
            if (table.labels[it->second] != y)
                throw DataError("manifest row '" + id + "': label disagrees with clinical.csv");
            const auto ct_path = dir / row.at("ct").get<std::string>();
            const auto pet_path = dir / row.at("pet").get<std::string>();
            hash_file(ct_path);
            hash_file(pet_path);
            ds.ct.push_back(read_image(ct_path));
            ds.pet.push_back(read_image(pet_path));
            require_same_dims(ds.ct.back(), ds.pet.back(), ("manifest row '" + id + "'").c_str());
            ds.ids.push_back(id);
            ds.labels.push_back(y);
            order.push_back(it->second);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("manifest.json: ") + e.what());
    }
    if (ds.ids.empty()) throw DataError("manifest.json lists no rows");
    ds.tabular = table.subset(order);
    if (std::filesystem::exists(dir / "ground_truth.json")) ds.ground_truth = read_json_file(dir / "ground_truth.json");
    ds.digest = h.value();
    return ds;
}

/// Everything the evaluation stage consumes plus the per-patient intermediate products.
struct PreparedData {
    LoadedDataset dataset;
    MultiModalData data;
    std::vector<ImageGray> fused;
    std::vector<RigidTransform> transforms;
    std::vector<QualityReport> quality;
    std::uint64_t features_key = 0;
};

namespace pipeline_detail {

inline std::uint64_t key_of(const std::string& stage, std::initializer_list<std::uint64_t> parents,
                            const nlohmann::json& params) {
    Fnv1a h;
    h.text(kVersion).text(stage).text(params.dump());
    for (auto p : parents) h.u64(p);
    return h.value();
}

inline nlohmann::json transform_json(const RigidTransform& t) {
    return {{"tx", t.tx}, {"ty", t.ty}, {"theta", t.theta}, {"scale", t.scale}};
}

inline RigidTransform transform_from_json(const nlohmann::json& j) {
    return {j.at("tx").get<double>(), j.at("ty").get<double>(), j.at("theta").get<double>(), j.at("scale").get<double>()};
}

}  // namespace pipeline_detail

/// Phantom (or given dataset) -> denoise -> preprocess -> register -> fuse -> features.
/// Every stage output is read back from the cache, so hits and misses feed identical bytes downstream.
inline PreparedData prepare_data(const PipelineConfig& cfg, StageRunner& runner) {
    namespace fs = std::filesystem;
    using pipeline_detail::key_of;
    const auto cj = to_json(cfg);
    const unsigned threads = cfg.run.threads;

    fs::path dataset_dir = cfg.phantom.dataset_dir;
    if (dataset_dir.empty()) {
        auto params = cj.at("phantom");
        params.erase("dataset_dir");
        const auto key = key_of("phantom", {}, params);
        dataset_dir = runner.run("phantom", key, "check the phantom section of the config", [&](const fs::path& out) {
                          write_phantom(generate_phantom(cfg.phantom.generator), out / "dataset");
                      }) / "dataset";
    }

    PreparedData prep;
    prep.dataset = runner.step("dataset", "the dataset directory needs manifest.json, schema.json and clinical.csv",
                               [&] { return load_dataset(dataset_dir); });
    const auto& ds = prep.dataset;
    const std::size_t n = ds.ids.size();

    std::uint64_t denoise_key = 0;
    DenoiserModel denoiser;
    if (cfg.denoise.enabled) {
        const int size = ds.pet.front().width;
        const nlohmann::json params = {{"denoise", cj.at("denoise")}, {"image_size", size}};
        denoise_key = key_of("denoise", {}, params);
        const auto dir = runner.run("denoise", denoise_key, "lower denoise.learning_rate or set denoise.enabled false",
                                    [&](const fs::path& out) {
                                        TrainConfig tc;
                                        tc.learning_rate = cfg.denoise.learning_rate;
                                        tc.batch_size = cfg.denoise.batch_size;
                                        tc.epochs = cfg.denoise.epochs;
                                        tc.seed = cfg.denoise.seed;
                                        tc.noise.sigma = cfg.denoise.noise_sigma;
                                        const auto clean =
                                            generate_clean_pet_set(cfg.denoise.train_images, size, cfg.denoise.seed);
                                        save_denoiser(train_denoiser(clean, tc), out / "denoiser.json");
                                    });
        denoiser = runner.step("denoise", "delete the cache directory if it was edited by hand",
                               [&] { return load_denoiser(dir / "denoiser.json"); });
    }

    // CT: normalize (+ optional equalization); lung field from the normalized CT; PET: denoise.
    const nlohmann::json pre_params = {{"equalize_ct", cfg.fusion.equalize_ct},
                                       {"lung_threshold", cfg.fusion.lung_threshold},
                                       {"denoise", cfg.denoise.enabled}};
    const auto pre_key = key_of("preprocess", {ds.digest, denoise_key}, pre_params);
    const auto pre_dir = runner.run("preprocess", pre_key, "check fusion.lung_threshold and the input images",
                                    [&](const fs::path& out) {
                                        std::vector<ImageGray> ct(n), pet(n), field(n);
                                        parallel_for(n, threads, [&](std::size_t i) {
                                            const auto norm = normalize_unit(ds.ct[i]);
                                            ct[i] = cfg.fusion.equalize_ct ? equalize_contrast(norm) : norm;
                                            const auto mask = lung_field(norm, cfg.fusion.lung_threshold);
                                            field[i] = write_mask_as_image(mask);
                                            pet[i] = cfg.denoise.enabled
                                                         ? clamp_unit(denoise(denoiser.spec, denoiser.weights, ds.pet[i]))
                                                         : ds.pet[i];
                                        });
                                        write_images(out / "ct.bin", ct);
                                        write_images(out / "pet.bin", pet);
                                        write_images(out / "lung_field.bin", field);
                                    });
    const auto ct = read_images(pre_dir / "ct.bin");
    const auto pet = read_images(pre_dir / "pet.bin");
    const auto field = read_images(pre_dir / "lung_field.bin");

    const auto reg_key = key_of("register", {pre_key}, {{"register", cfg.fusion.register_pet}});
    const auto reg_dir = runner.run("register", reg_key, "set fusion.register false if the images are already aligned",
                                    [&](const fs::path& out) {
                                        std::vector<ImageGray> aligned(n);
                                        std::vector<RigidTransform> ts(n);
                                        parallel_for(n, threads, [&](std::size_t i) {
                                            if (cfg.fusion.register_pet) ts[i] = register_rigid(ct[i], pet[i]).transform;
                                            aligned[i] = clamp_unit(resample_bilinear(pet[i], ts[i]));
                                        });
                                        nlohmann::json tj = nlohmann::json::array();
                                        for (const auto& t : ts) tj.push_back(pipeline_detail::transform_json(t));
                                        write_json_file(out / "transforms.json", tj);
                                        write_images(out / "pet_aligned.bin", aligned);
                                    });
    const auto aligned = read_images(reg_dir / "pet_aligned.bin");
    for (const auto& t : read_json_file(reg_dir / "transforms.json"))
        prep.transforms.push_back(pipeline_detail::transform_from_json(t));

    const nlohmann::json fuse_params = {{"family", cj["fusion"]["family"]},
                                        {"levels", cfg.fusion.levels},
                                        {"ll_rule", cfg.fusion.ll_rule},
                                        {"detail_rule", cfg.fusion.detail_rule}};
    const auto fuse_key = key_of("fuse", {reg_key}, fuse_params);
    const auto fuse_dir = runner.run("fuse", fuse_key, "fusion.levels must fit the image size", [&](const fs::path& out) {
        const auto rule = cfg.fusion.rule();
        std::vector<ImageGray> fused(n);
        std::vector<QualityReport> q(n);
        parallel_for(n, threads, [&](std::size_t i) {
            fused[i] = fuse_wavelet(ct[i], aligned[i], cfg.fusion.family, cfg.fusion.levels, rule);
            q[i] = fusion_quality(fused[i], ct[i], aligned[i]);
        });
        nlohmann::json qj = nlohmann::json::array();
        for (const auto& r : q)
            qj.push_back({{"entropy_fused", r.entropy_fused},
                          {"mi_fused_ct", r.mi_fused_ct},
                          {"mi_fused_pet", r.mi_fused_pet},
                          {"psnr_vs_ct", r.psnr_vs_ct},
                          {"ssim_vs_ct", r.ssim_vs_ct}});
        write_images(out / "fused.bin", fused);
        write_json_file(out / "quality.json", qj);
    });
    prep.fused = read_images(fuse_dir / "fused.bin");
    for (const auto& q : read_json_file(fuse_dir / "quality.json"))
        prep.quality.push_back({q.at("entropy_fused").get<double>(), q.at("mi_fused_ct").get<double>(),
                                q.at("mi_fused_pet").get<double>(), q.at("psnr_vs_ct").get<double>(),
                                q.at("ssim_vs_ct").get<double>()});

    const nlohmann::json feat_params = {{"feature_levels", cfg.fusion.feature_levels},
                                        {"lung_field_mask", cfg.fusion.lung_field_mask}};
    prep.features_key = key_of("features", {fuse_key}, feat_params);
    const auto feat_dir = runner.run("features", prep.features_key, "images must be at least 16x16",
                                     [&](const fs::path& out) {
                                         std::vector<std::vector<double>> fc(n), ff(n);
                                         parallel_for(n, threads, [&](std::size_t i) {
                                             const auto mask = image_to_mask(field[i]);
                                             auto view = [&](const ImageGray& img) {
                                                 return cfg.fusion.lung_field_mask ? apply_mask(img, mask) : img;
                                             };
                                             fc[i] = extract_image_features(view(ct[i]), cfg.fusion.feature_levels);
                                             ff[i] = extract_image_features(view(prep.fused[i]), cfg.fusion.feature_levels);
                                         });
                                         Matrix mc, mf;
                                         for (std::size_t i = 0; i < n; ++i) {
                                             mc.append_row(fc[i]);
                                             mf.append_row(ff[i]);
                                         }
                                         write_arrays(out / "features.bin", {mc, mf});
                                     });
    const auto feats = read_arrays(feat_dir / "features.bin");

    prep.data.tabular = ds.tabular;
    prep.data.ct_features = feats.at(0);
    prep.data.fused_features = feats.at(1);
    prep.data.labels = ds.labels;
    prep.data.class_names = ds.class_names;
    prep.data.ids = ds.ids;
    return prep;
}

/// Key of the evaluation stage for the given prepared data and config.
inline std::uint64_t evaluation_key(const PipelineConfig& cfg, const PreparedData& prep, const std::string& what) {
    const auto cj = to_json(cfg);
    const nlohmann::json params = {{"tabular", cj.at("tabular")},
                                   {"classify", cj.at("classify")},
                                   {"evaluate", cj.at("evaluate")},
                                   {"what", what}};
    return pipeline_detail::key_of("evaluate", {prep.features_key, prep.dataset.digest}, params);
}

inline nlohmann::json version_info() {
    const PipelineConfig defaults;
    return {{"name", "lungfuse"},
            {"version", kVersion},
            {"config_schema_version", kConfigSchemaVersion},
            {"report_schema_version", kReportSchemaVersion},
            {"defaults", to_json(defaults)}};
}

struct RunResult {
    std::filesystem::path output_dir;
    nlohmann::json report;
    std::string table;
    std::vector<StageRecord> stages;
};

/// Full pipeline. Writes the report bundle to cfg.run.output_dir:
///   report.json, comparison.txt, stages.log, fused/<id>.pgm
inline RunResult run_pipeline(const PipelineConfig& cfg, std::ostream* log = &std::cerr) {
    namespace fs = std::filesystem;
    cfg.validate();
    StageRunner runner(cfg.cache_path(), log);
    const auto prep = prepare_data(cfg, runner);

    const auto eval_key = evaluation_key(cfg, prep, "compare");
    const auto eval_dir = runner.run("evaluate", eval_key, "every class needs at least evaluate.k rows",
                                     [&](const fs::path& out) {
                                         const auto cmp = compare_modalities(prep.data, cfg.evaluate.k, cfg.classifier(),
                                                                             cfg.evaluate.seed);
                                         write_json_file(out / "comparison.json", to_json(cmp));
                                         std::ofstream(out / "comparison.txt", std::ios::binary) << comparison_table(cmp);
                                     });

    RunResult res;
    res.output_dir = cfg.run.output_dir;
    runner.step("report", "check that run.output_dir is writable", [&] {
        const auto comparison = read_json_file(eval_dir / "comparison.json");
        const auto bytes = read_file_bytes(eval_dir / "comparison.txt");
        res.table.assign(bytes.begin(), bytes.end());

        nlohmann::json rep;
        rep["schema_version"] = kReportSchemaVersion;
        rep["version"] = kVersion;
        rep["config"] = to_json(cfg);
        rep["notes"] = {
            "image features are wavelet band statistics plus an 8x8 pooled grid of the lung-field image, "
            "classified by a small MLP; they stand in for pretrained transformer backbones",
            "precision, recall and F1 are macro-averaged; +/- values are sample standard deviations over folds",
            "all configurations share the same stratified folds and seeds"};

        std::map<std::string, std::size_t> counts;
        for (const auto& c : prep.dataset.class_names) counts[c] = 0;
        for (int y : prep.dataset.labels) ++counts[prep.dataset.class_names[static_cast<std::size_t>(y)]];
        rep["dataset"] = {{"rows", prep.dataset.ids.size()},
                          {"counts_per_class", counts},
                          {"digest", Fnv1a::to_hex(prep.dataset.digest)},
                          {"image_features", prep.data.fused_features.cols},
                          {"tabular_columns", prep.data.tabular.columns.size()}};

        nlohmann::json reg = {{"enabled", cfg.fusion.register_pet}};
        if (prep.dataset.ground_truth.is_object() && prep.dataset.ground_truth.contains("patients")) {
            double sum_t = 0.0, max_t = 0.0, sum_th = 0.0, max_th = 0.0;
            std::size_t m = 0;
            for (std::size_t i = 0; i < prep.dataset.ids.size(); ++i)
                for (const auto& p : prep.dataset.ground_truth["patients"]) {
                    if (p.value("id", std::string{}) != prep.dataset.ids[i]) continue;
                    const auto& jt = p.at("jitter");
                    const RigidTransform jitter{jt.at("tx").get<double>(), jt.at("ty").get<double>(),
                                                jt.at("theta_deg").get<double>() * kDegToRad, jt.at("scale").get<double>()};
                    const auto truth = jitter.inverse();
                    const auto& t = prep.transforms[i];
                    const double et = std::hypot(t.tx - truth.tx, t.ty - truth.ty);
                    const double eth = std::abs(t.theta - truth.theta) / kDegToRad;
                    sum_t += et;
                    sum_th += eth;
                    max_t = std::max(max_t, et);
                    max_th = std::max(max_th, eth);
                    ++m;
                }
            if (m > 0)
                reg["error_vs_ground_truth"] = {{"mean_translation_px", sum_t / static_cast<double>(m)},
                                                {"max_translation_px", max_t},
                                                {"mean_rotation_deg", sum_th / static_cast<double>(m)},
                                                {"max_rotation_deg", max_th}};
        }
        rep["registration"] = reg;

        QualityReport mean_q;
        for (const auto& q : prep.quality) {
            mean_q.entropy_fused += q.entropy_fused;
            mean_q.mi_fused_ct += q.mi_fused_ct;
            mean_q.mi_fused_pet += q.mi_fused_pet;
            mean_q.psnr_vs_ct += q.psnr_vs_ct;
            mean_q.ssim_vs_ct += q.ssim_vs_ct;
        }
        const double nq = static_cast<double>(std::max<std::size_t>(prep.quality.size(), 1));
        rep["fusion_quality_mean"] = {{"entropy_fused", mean_q.entropy_fused / nq},
                                      {"mi_fused_ct", mean_q.mi_fused_ct / nq},
                                      {"mi_fused_pet", mean_q.mi_fused_pet / nq},
                                      {"psnr_vs_ct", mean_q.psnr_vs_ct / nq},
                                      {"ssim_vs_ct", mean_q.ssim_vs_ct / nq}};
        rep["comparison"] = comparison;

        nlohmann::json stages = nlohmann::json::array();
        std::string stage_log;
        for (const auto& s : runner.records()) {
            stages.push_back({{"stage", s.name}, {"key", Fnv1a::to_hex(s.key)}});
            stage_log += s.name + " " + Fnv1a::to_hex(s.key) + "\n";
        }
        rep["stages"] = stages;
        res.report = rep;

        const fs::path out = cfg.run.output_dir;
        fs::create_directories(out / "fused");
        write_json_file(out / "report.json", rep);
        std::ofstream(out / "comparison.txt", std::ios::binary | std::ios::trunc) << res.table;
        std::ofstream(out / "stages.log", std::ios::binary | std::ios::trunc) << stage_log;
        for (std::size_t i = 0; i < prep.fused.size(); ++i)
            write_image(prep.fused[i], out / "fused" / (prep.dataset.ids[i] + ".pgm"));
        return 0;
    });
    res.stages = runner.records();
    return res;
}

}  // namespace lungfuse
