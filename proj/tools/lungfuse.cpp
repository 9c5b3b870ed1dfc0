// Command-line front end. Exit codes: 0 ok, 2 config, 3 data, 4 numerical.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lungfuse/denoise.hpp"
#include "lungfuse/fusion.hpp"
#include "lungfuse/imgcore.hpp"
#include "lungfuse/mmclassify.hpp"
#include "lungfuse/phantom.hpp"
#include "lungfuse/pipeline.hpp"
#include "lungfuse/tabular.hpp"

namespace fs = std::filesystem;
using namespace lungfuse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

PipelineConfig config_from(const std::string& path) {
    return path.empty() ? PipelineConfig{} : load_pipeline_config(path);
}

int cmd_phantom(int n, int size, std::uint64_t seed, double balance, double noise, double jitter, double signal,
                double missing, const std::string& out) {
    PhantomConfig cfg;
    cfg.n_patients = n;
    cfg.image_size = size;
    cfg.seed = seed;
    cfg.class_balance = balance;
    cfg.noise_sigma = noise;
    cfg.registration_jitter = jitter;
    cfg.signal_strength = signal;
    cfg.missing_rate = missing;
    try {
        cfg.validate();
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    write_phantom(generate_phantom(cfg), out);
    print_json(describe(out));
    return kExitOk;
}

int cmd_fuse(const std::string& ct_path, const std::string& pet_path, const std::string& out, const std::string& family,
             int levels, const std::string& ll_rule, const std::string& detail_rule, const std::string& reg,
             const std::string& report_path) {
    FusionRule rule;
    WaveletFamily fam{};
    try {
        parse_ll_rule(ll_rule, rule);
        rule.detail_rule = parse_detail_rule(detail_rule);
        rule.validate();
        fam = parse_wavelet_family(family);
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    if (reg != "on" && reg != "off") throw ConfigError("--register expects on or off, got '" + reg + "'");
    const auto ct = read_image(ct_path);
    auto pet = read_image(pet_path);
    RigidTransform t;
    if (reg == "on") {
        const auto r = register_rigid(ct, pet);
        t = r.transform;
        pet = clamp_unit(resample_bilinear(pet, t, ct.width, ct.height));
    }
    const auto fused = fuse_wavelet(ct, pet, fam, levels, rule);
    write_image(fused, out);
    const auto q = fusion_quality(fused, ct, pet);
    const nlohmann::json rep = {
        {"fused", out},
        {"family", std::string(to_string(fam))},
        {"levels", levels},
        {"ll_rule", ll_rule},
        {"detail_rule", detail_rule},
        {"registration", {{"enabled", reg == "on"}, {"tx", t.tx}, {"ty", t.ty}, {"theta_deg", t.theta / kDegToRad}, {"scale", t.scale}}},
        {"quality",
         {{"entropy_fused", q.entropy_fused},
          {"mi_fused_ct", q.mi_fused_ct},
          {"mi_fused_pet", q.mi_fused_pet},
          {"psnr_vs_ct", q.psnr_vs_ct},
          {"ssim_vs_ct", q.ssim_vs_ct}}}};
    if (!report_path.empty()) write_json_file(report_path, rep);
    print_json(rep);
    return kExitOk;
}

int cmd_register(const std::string& fixed_path, const std::string& moving_path, const std::string& out) {
    const auto fixed = read_image(fixed_path);
    const auto moving = read_image(moving_path);
    const auto r = register_rigid(fixed, moving);
    if (!out.empty()) write_image(clamp_unit(resample_bilinear(moving, r.transform, fixed.width, fixed.height)), out);
    print_json({{"tx", r.transform.tx},
                {"ty", r.transform.ty},
                {"theta_deg", r.transform.theta / kDegToRad},
                {"scale", r.transform.scale},
                {"ncc", r.ncc},
                {"evaluations", r.evaluations}});
    return kExitOk;
}

int cmd_denoise_train(const std::string& out, const std::string& clean_dir, int images, int size, int epochs, int batch,
                      double lr, double sigma, std::uint64_t seed) {
    std::vector<ImageGray> clean;
    if (!clean_dir.empty()) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(clean_dir))
            if (e.path().extension() == ".pgm") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) clean.push_back(read_image(f));
        if (clean.empty()) throw DataError("no .pgm files in " + clean_dir);
    } else {
        clean = generate_clean_pet_set(images, size, seed);
    }
    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch;
    tc.learning_rate = lr;
    tc.noise.sigma = sigma;
    tc.seed = seed;
    try {
        tc.validate();
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
    const auto model = train_denoiser(clean, tc);
    save_denoiser(model, out);
    print_json({{"weights", out},
                {"images", clean.size()},
                {"epochs", model.epochs},
                {"final_loss", model.loss_log.empty() ? 0.0 : model.loss_log.back()}});
    return kExitOk;
}

int cmd_denoise_apply(const std::string& weights, const std::string& in, const std::string& out) {
    const auto model = load_denoiser(weights);
    const auto img = read_image(in);
    write_image(clamp_unit(denoise(model.spec, model.weights, img)), out);
    return kExitOk;
}

int cmd_preprocess(const std::string& csv, const std::string& schema_path, const std::string& out,
                   const std::string& fit_out, int smote_k, std::size_t top_k, std::uint64_t seed) {
    const auto schema = read_schema(schema_path);
    const auto table = read_tabular(csv, schema);
    const auto fit = fit_preprocess(table);
    const auto enc = apply_preprocess(fit, table);
    Matrix x = enc.x;
    std::vector<int> labels = table.labels;
    std::vector<std::string> ids = table.row_ids;
    auto names = enc.feature_names;
    if (smote_k > 0) {
        const auto bal = smote(x, labels, smote_k, seed);
        x = bal.x;
        labels = bal.labels;
        for (std::size_t i = ids.size(); i < labels.size(); ++i) ids.push_back("synthetic_" + std::to_string(i - bal.n_original));
    }
    std::vector<std::size_t> keep(x.cols);
    std::iota(keep.begin(), keep.end(), 0);
    nlohmann::json importance;
    if (top_k > 0) {
        const auto rep = boosted_importance(x, labels);
        keep = select_features(rep, std::min(top_k, x.cols));
        for (std::size_t j = 0; j < rep.gains.size(); ++j) importance[names[j]] = rep.gains[j];
    }
    std::ofstream o(out, std::ios::binary | std::ios::trunc);
    if (!o) throw DataError("cannot write " + out);
    o << "row_id";
    for (auto j : keep) o << "," << names[j];
    o << ",label\n";
    char buf[32];
    for (std::size_t r = 0; r < x.rows; ++r) {
        o << ids[r];
        for (auto j : keep) {
            std::snprintf(buf, sizeof buf, "%.17g", x(r, j));
            o << "," << buf;
        }
        o << "," << schema.classes[static_cast<std::size_t>(labels[r])] << "\n";
    }
    nlohmann::json summary = {{"rows_in", table.size()},
                              {"rows_out", x.rows},
                              {"features_out", keep.size()},
                              {"unseen_categories", enc.unseen_categories},
                              {"preprocessor", to_json(fit)}};
    if (!importance.is_null()) summary["gain"] = importance;
    if (!fit_out.empty()) write_json_file(fit_out, summary);
    print_json({{"rows_in", table.size()}, {"rows_out", x.rows}, {"features_out", keep.size()}, {"output", out}});
    return kExitOk;
}

int cmd_evaluate(const std::string& config, const std::string& data, const std::string& input, const std::string& out,
                 std::optional<int> k, std::optional<std::uint64_t> seed) {
    auto cfg = config_from(config);
    if (!data.empty()) cfg.phantom.dataset_dir = data;
    if (k) cfg.evaluate.k = *k;
    if (seed) cfg.evaluate.seed = *seed;
    cfg.validate();
    const auto which = parse_input_config(input);
    StageRunner runner(cfg.cache_path());
    const auto prep = prepare_data(cfg, runner);
    const auto rep = runner.step("evaluate", "every class needs at least evaluate.k rows", [&] {
        return kfold_evaluate(prep.data, which, cfg.evaluate.k, cfg.classifier(), cfg.evaluate.seed);
    });
    auto j = to_json(rep);
    j["schema_version"] = kReportSchemaVersion;
    j["version"] = kVersion;
    j["config"] = to_json(cfg);
    if (!out.empty()) write_json_file(out, j);
    print_json(j);
    return kExitOk;
}

int cmd_compare(const std::string& config, const std::string& data, const std::string& out) {
    auto cfg = config_from(config);
    if (!data.empty()) cfg.phantom.dataset_dir = data;
    if (!out.empty()) cfg.run.output_dir = out;
    cfg.validate();
    StageRunner runner(cfg.cache_path());
    const auto prep = prepare_data(cfg, runner);
    const auto cmp = runner.step("evaluate", "every class needs at least evaluate.k rows", [&] {
        return compare_modalities(prep.data, cfg.evaluate.k, cfg.classifier(), cfg.evaluate.seed);
    });
    fs::create_directories(cfg.run.output_dir);
    auto j = to_json(cmp);
    j["schema_version"] = kReportSchemaVersion;
    j["version"] = kVersion;
    j["config"] = to_json(cfg);
    write_json_file(fs::path(cfg.run.output_dir) / "comparison.json", j);
    const auto table = comparison_table(cmp);
    std::ofstream(fs::path(cfg.run.output_dir) / "comparison.txt", std::ios::binary | std::ios::trunc) << table;
    std::cout << table;
    return kExitOk;
}

int cmd_run(const std::string& config, const std::string& out, std::optional<unsigned> threads) {
    auto cfg = config_from(config);
    if (!out.empty()) cfg.run.output_dir = out;
    if (threads) cfg.run.threads = *threads;
    const auto res = run_pipeline(cfg);
    std::cout << res.table;
    std::cout << "report: " << (res.output_dir / "report.json").string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lungfuse: CT/PET wavelet fusion and multi-modal NSCLC subtype classification"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    std::function<int()> action;

    auto* ph = app.add_subcommand("phantom", "Generate a synthetic paired CT/PET + tabular dataset");
    int ph_n = 60, ph_size = 64;
    std::uint64_t ph_seed = 42;
    double ph_balance = 0.6, ph_noise = 0.1, ph_jitter = 4.0, ph_signal = 1.0, ph_missing = 0.0;
    std::string ph_out;
    ph->add_option("--n", ph_n, "Number of patients")->capture_default_str();
    ph->add_option("--size", ph_size, "Image size in pixels (divisible by 4)")->capture_default_str();
    ph->add_option("--seed", ph_seed, "Random seed")->capture_default_str();
    ph->add_option("--balance", ph_balance, "Fraction of adenocarcinoma patients")->capture_default_str();
    ph->add_option("--noise", ph_noise, "PET noise sigma (CT gets a quarter)")->capture_default_str();
    ph->add_option("--jitter", ph_jitter, "Maximum PET misregistration in pixels")->capture_default_str();
    ph->add_option("--signal", ph_signal, "Subtype signal strength")->capture_default_str();
    ph->add_option("--missing-rate", ph_missing, "Fraction of tabular cells left empty")->capture_default_str();
    ph->add_option("--out", ph_out, "Output directory")->required();
    ph->callback([&] {
        action = [&] { return cmd_phantom(ph_n, ph_size, ph_seed, ph_balance, ph_noise, ph_jitter, ph_signal, ph_missing, ph_out); };
    });

    auto* fu = app.add_subcommand("fuse", "Register and fuse one CT/PET pair");
    std::string fu_ct, fu_pet, fu_out, fu_family = "haar", fu_ll = "average", fu_detail = "maxabs", fu_reg = "on", fu_report;
    int fu_levels = 1;
    fu->add_option("--ct", fu_ct, "CT image (16-bit PGM)")->required();
    fu->add_option("--pet", fu_pet, "PET image (16-bit PGM)")->required();
    fu->add_option("--out", fu_out, "Fused output image")->required();
    fu->add_option("--family", fu_family, "Wavelet family: haar or db2")->capture_default_str();
    fu->add_option("--levels", fu_levels, "Decomposition levels")->capture_default_str();
    fu->add_option("--ll-rule", fu_ll, "Approximation rule: average or weighted:W")->capture_default_str();
    fu->add_option("--detail-rule", fu_detail, "Detail rule: maxabs or average")->capture_default_str();
    fu->add_option("--register", fu_reg, "Register PET to CT first: on or off")->capture_default_str();
    fu->add_option("--report", fu_report, "Write the fusion quality report here");
    fu->callback([&] {
        action = [&] { return cmd_fuse(fu_ct, fu_pet, fu_out, fu_family, fu_levels, fu_ll, fu_detail, fu_reg, fu_report); };
    });

    auto* rg = app.add_subcommand("register", "Rigidly register a moving image to a fixed image");
    std::string rg_fixed, rg_moving, rg_out;
    rg->add_option("--fixed", rg_fixed, "Fixed image")->required();
    rg->add_option("--moving", rg_moving, "Moving image")->required();
    rg->add_option("--out", rg_out, "Write the resampled moving image here");
    rg->callback([&] { action = [&] { return cmd_register(rg_fixed, rg_moving, rg_out); }; });

    auto* dt = app.add_subcommand("denoise-train", "Train the denoising auto-encoder");
    std::string dt_out, dt_clean;
    int dt_images = 24, dt_size = 64, dt_epochs = 100, dt_batch = 4;
    double dt_lr = 0.001, dt_sigma = 0.1;
    std::uint64_t dt_seed = 42;
    dt->add_option("--out", dt_out, "Weights file (JSON)")->required();
    dt->add_option("--clean-dir", dt_clean, "Directory of clean training PGMs (default: phantom PET set)");
    dt->add_option("--images", dt_images, "Phantom training images")->capture_default_str();
    dt->add_option("--size", dt_size, "Phantom image size")->capture_default_str();
    dt->add_option("--epochs", dt_epochs)->capture_default_str();
    dt->add_option("--batch", dt_batch)->capture_default_str();
    dt->add_option("--lr", dt_lr)->capture_default_str();
    dt->add_option("--sigma", dt_sigma, "Gaussian noise sigma")->capture_default_str();
    dt->add_option("--seed", dt_seed)->capture_default_str();
    dt->callback([&] {
        action = [&] {
            return cmd_denoise_train(dt_out, dt_clean, dt_images, dt_size, dt_epochs, dt_batch, dt_lr, dt_sigma, dt_seed);
        };
    });

    auto* da = app.add_subcommand("denoise-apply", "Denoise one image with trained weights");
    std::string da_weights, da_in, da_out;
    da->add_option("--weights", da_weights)->required();
    da->add_option("--in", da_in)->required();
    da->add_option("--out", da_out)->required();
    da->callback([&] { action = [&] { return cmd_denoise_apply(da_weights, da_in, da_out); }; });

    auto* pp = app.add_subcommand("preprocess", "Impute, encode, scale, balance and select tabular features");
    std::string pp_csv, pp_schema, pp_out, pp_fit;
    int pp_smote = 0;
    std::size_t pp_top = 0;
    std::uint64_t pp_seed = 42;
    pp->add_option("--csv", pp_csv)->required();
    pp->add_option("--schema", pp_schema)->required();
    pp->add_option("--out", pp_out, "Encoded CSV")->required();
    pp->add_option("--fit-out", pp_fit, "Write fitted statistics (JSON)");
    pp->add_option("--smote-k", pp_smote, "SMOTE neighbours; 0 disables balancing")->capture_default_str();
    pp->add_option("--top-k", pp_top, "Keep the top-k features by boosted gain; 0 keeps all")->capture_default_str();
    pp->add_option("--seed", pp_seed)->capture_default_str();
    pp->callback([&] {
        action = [&] { return cmd_preprocess(pp_csv, pp_schema, pp_out, pp_fit, pp_smote, pp_top, pp_seed); };
    });

    auto* ev = app.add_subcommand("evaluate", "Cross-validate one input configuration");
    std::string ev_config, ev_data, ev_input = "multimodal", ev_out;
    std::optional<int> ev_k;
    std::optional<std::uint64_t> ev_seed;
    ev->add_option("--config", ev_config, "Pipeline config (JSON)");
    ev->add_option("--data", ev_data, "Dataset directory (default: generate the phantom)");
    ev->add_option("--input", ev_input, "tabular-only, ct-only, fused or multimodal")->capture_default_str();
    ev->add_option("--out", ev_out, "Metrics report (JSON)");
    ev->add_option("--k", ev_k, "Folds");
    ev->add_option("--seed", ev_seed, "Fold seed");
    ev->callback([&] { action = [&] { return cmd_evaluate(ev_config, ev_data, ev_input, ev_out, ev_k, ev_seed); }; });

    auto* cp = app.add_subcommand("compare", "Cross-validate all four input configurations on identical folds");
    std::string cp_config, cp_data, cp_out;
    cp->add_option("--config", cp_config, "Pipeline config (JSON)");
    cp->add_option("--data", cp_data, "Dataset directory (default: generate the phantom)");
    cp->add_option("--out", cp_out, "Output directory");
    cp->callback([&] { action = [&] { return cmd_compare(cp_config, cp_data, cp_out); }; });

    auto* rn = app.add_subcommand("run", "Run the full pipeline and write a report bundle");
    std::string rn_config, rn_out;
    std::optional<unsigned> rn_threads;
    rn->add_option("--config", rn_config, "Pipeline config (JSON)");
    rn->add_option("--out", rn_out, "Output directory (overrides run.output_dir)");
    rn->add_option("--threads", rn_threads, "Worker threads (overrides run.threads)");
    rn->callback([&] { action = [&] { return cmd_run(rn_config, rn_out, rn_threads); }; });

    auto* vs = app.add_subcommand("version", "Print build metadata and default parameters");
    vs->callback([&] {
        action = [] {
            print_json(version_info());
            return kExitOk;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        return action();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ContractError& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
}
