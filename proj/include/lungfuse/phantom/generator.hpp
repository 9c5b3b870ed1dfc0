#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "lungfuse/core/hash.hpp"
#include "lungfuse/core/rng.hpp"
#include "lungfuse/fusion/rigid.hpp"
#include "lungfuse/imgcore/pgm.hpp"
#include "lungfuse/imgcore/volume.hpp"

namespace lungfuse {

struct PhantomConfig {
    int n_patients = 60;
    int image_size = 64;
    double class_balance = 0.6;        // fraction of adenocarcinoma
    double noise_sigma = 0.1;          // PET noise; CT receives a quarter of it
    double registration_jitter = 4.0;  // max |tx|, |ty| in px; rotation up to 0.75 deg per px
    double signal_strength = 1.0;
    double missing_rate = 0.0;
    std::uint64_t seed = 42;

    void validate() const {
        if (n_patients < 2) throw ContractError("phantom: n_patients must be >= 2");
        if (image_size < 16 || image_size % 4 != 0)
            throw ContractError("phantom: image_size must be >= 16 and divisible by 4");
        if (!(class_balance > 0.0 && class_balance < 1.0)) throw ContractError("phantom: class_balance must be in (0,1)");
        if (!(noise_sigma >= 0.0)) throw ContractError("phantom: noise_sigma must be >= 0");
        if (!(registration_jitter >= 0.0)) throw ContractError("phantom: registration_jitter must be >= 0");
        if (!(signal_strength >= 0.0)) throw ContractError("phantom: signal_strength must be >= 0");
        if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ContractError("phantom: missing_rate must be in [0,1)");
    }
};

inline const std::vector<std::string>& phantom_class_names() {
    static const std::vector<std::string> names{"adenocarcinoma", "squamous"};
    return names;
}

struct Ellipse {
    double cx, cy, ax, ay;
    bool contains(double x, double y) const {
        const double u = (x - cx) / ax, v = (y - cy) / ay;
        return u * u + v * v <= 1.0;
    }
};

/// One synthetic patient with everything the generator knows about it.
struct PhantomPatient {
    std::string id;
    int label = 0;
    ImageGray ct;
    ImageGray pet;            // noisy, jittered
    ImageGray pet_clean;      // noise-free, jittered
    ImageGray hotspot_layer;  // hotspot component only, jittered
    BinaryMask lung_truth;
    RigidTransform jitter;    // CT frame -> PET frame
    double tumor_x = 0.0, tumor_y = 0.0, tumor_radius = 0.0;
    double texture_amplitude = 0.0;
    double hotspot_peak = 0.0;
    double hotspot_sigma = 0.0;
    // clinical + genomic row; NaN marks a numeric missing value, "" a categorical one
    std::vector<double> numeric;
    std::vector<std::string> categorical;
};

struct PhantomDataset {
    PhantomConfig config;
    std::vector<PhantomPatient> patients;
};

inline const std::vector<std::string>& phantom_numeric_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c{"age", "pack_years", "ecog", "tumor_size_mm"};
        for (int g = 1; g <= 10; ++g) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "gene_%02d", g);
            c.emplace_back(buf);
        }
        return c;
    }();
    return cols;
}

inline const std::vector<std::string>& phantom_categorical_columns() {
    static const std::vector<std::string> cols{"sex", "smoking_status"};
    return cols;
}

inline const std::vector<std::vector<std::string>>& phantom_category_sets() {
    static const std::vector<std::vector<std::string>> sets{{"F", "M"}, {"never", "former", "current"}};
    return sets;
}

namespace phantom_detail {

inline ImageGray gaussian_blur(const ImageGray& img, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& v : k) v /= sum;
    ImageGray tmp(img.width, img.height), out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * img.at(std::clamp(x + i, 0, img.width - 1), y);
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp.at(x, std::clamp(y + i, 0, img.height - 1));
            out.at(x, y) = acc;
        }
    return out;
}

struct Anatomy {
    Ellipse body;
    Ellipse lungs[2];
};

inline Anatomy random_anatomy(Rng& rng, double s) {
    const double c = (s - 1) / 2.0;
    Anatomy a;
    a.body = {c + rng.uniform(-1.5, 1.5), c + rng.uniform(-1.5, 1.5), s * rng.uniform(0.40, 0.44),
              s * rng.uniform(0.32, 0.36)};
    for (int side = 0; side < 2; ++side) {
        const double dir = side == 0 ? -1.0 : 1.0;
        a.lungs[side] = {a.body.cx + dir * s * rng.uniform(0.17, 0.20), a.body.cy + rng.uniform(-1.0, 1.0),
                         s * rng.uniform(0.10, 0.12), s * rng.uniform(0.19, 0.22)};
    }
    return a;
}

inline void render_ct_anatomy(ImageGray& ct, BinaryMask* lungs, const Anatomy& a, double lung_scale = 1.0) {
    for (int y = 0; y < ct.height; ++y)
        for (int x = 0; x < ct.width; ++x) {
            double v = 0.0;
            if (a.body.contains(x, y)) v = 0.78;
            bool lung = false;
            for (const auto& l : a.lungs) {
                const Ellipse scaled{l.cx, l.cy, l.ax * lung_scale, l.ay * lung_scale};
                if (lung_scale > 0.0 && scaled.contains(x, y)) lung = true;
            }
            if (lung) v = 0.10;
            ct.at(x, y) = v;
            if (lungs) lungs->set(x, y, lung);
        }
}

}  // namespace phantom_detail

/// Builds one patient. Subtype signal is planted in CT tumour texture, the PET
/// hotspot (peak and extent) and a subset of clinical/genomic columns, with
/// strengths proportional to cfg.signal_strength.
inline PhantomPatient generate_patient(const PhantomConfig& cfg, int index, int label) {
    Rng rng(Fnv1a().text("lungfuse-phantom").u64(cfg.seed).u64(static_cast<std::uint64_t>(index)).value());
    const int s = cfg.image_size;
    const double scale = s / 64.0;
    const double sig = cfg.signal_strength;
    const bool squamous = label == 1;

    PhantomPatient p;
    char id[32];
    std::snprintf(id, sizeof id, "patient_%03d", index);
    p.id = id;
    p.label = label;

    const auto anatomy = phantom_detail::random_anatomy(rng, s);
    p.ct = ImageGray(s, s);
    p.lung_truth = BinaryMask(s, s);
    phantom_detail::render_ct_anatomy(p.ct, &p.lung_truth, anatomy);

    // Tumour sits in the lower part of the right-hand lung.
    const auto& lung = anatomy.lungs[1];
    p.tumor_radius = scale * rng.uniform(3.0, 4.5);
    // Positions leaving less than a 1.5 px rim of lung around the tumour are redrawn, so the
    // tumour is always enclosed by lung tissue; after 16 misses it goes to the lung centre line.
    const Ellipse rim{lung.cx, lung.cy, lung.ax - p.tumor_radius - 1.5 * scale, lung.ay - p.tumor_radius - 1.5 * scale};
    bool placed = false;
    for (int attempt = 0; attempt < 16 && !placed; ++attempt) {
        p.tumor_x = lung.cx + rng.uniform(-0.25, 0.25) * lung.ax;
        p.tumor_y = lung.cy + lung.ay * 0.35 + rng.uniform(-0.15, 0.15) * lung.ay;
        placed = rim.contains(p.tumor_x, p.tumor_y);
    }
    if (!placed) {
        p.tumor_x = lung.cx;
        p.tumor_y = lung.cy + lung.ay * 0.25;
    }
    p.texture_amplitude = rng.uniform(0.02, 0.10) + (squamous ? 0.08 * sig : 0.0);
    const Ellipse tumor{p.tumor_x, p.tumor_y, p.tumor_radius, p.tumor_radius};
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            const double tex = rng.uniform(-1.0, 1.0);
            if (!tumor.contains(x, y)) continue;
            p.ct.at(x, y) = 0.62 + p.texture_amplitude * tex;
            p.lung_truth.set(x, y, false);
        }
    const double ct_sigma = cfg.noise_sigma / 4.0;
    for (double& v : p.ct.data) v = std::clamp(v + ct_sigma * rng.normal(), 0.0, 1.0);

    // PET in the CT frame: blurred anatomical uptake plus a Gaussian hotspot.
    ImageGray uptake(s, s);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            double v = anatomy.body.contains(x, y) ? 0.28 : 0.0;
            for (const auto& l : anatomy.lungs)
                if (l.contains(x, y)) v = 0.08;
            uptake.at(x, y) = v;
        }
    uptake = phantom_detail::gaussian_blur(uptake, 1.2 * scale);
    p.hotspot_peak = rng.uniform(0.30, 0.55) + (squamous ? 0.30 * sig : 0.0);
    p.hotspot_sigma = scale * (rng.uniform(1.6, 2.4) + (squamous ? 0.8 * sig : 0.0));
    ImageGray hotspot(s, s);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            const double dx = x - p.tumor_x, dy = y - p.tumor_y;
            hotspot.at(x, y) = p.hotspot_peak * std::exp(-(dx * dx + dy * dy) / (2 * p.hotspot_sigma * p.hotspot_sigma));
        }

    const double j = cfg.registration_jitter;
    p.jitter = {rng.uniform(-j, j), rng.uniform(-j, j), rng.uniform(-0.75 * j, 0.75 * j) * kDegToRad, 1.0};
    ImageGray pet_frame(s, s);
    for (std::size_t i = 0; i < pet_frame.size(); ++i) pet_frame.data[i] = uptake.data[i] + hotspot.data[i];
    p.pet_clean = clamp_unit(resample_bilinear(pet_frame, p.jitter));
    p.hotspot_layer = resample_bilinear(hotspot, p.jitter);
    p.pet = p.pet_clean;
    for (double& v : p.pet.data) v = std::clamp(v + cfg.noise_sigma * rng.normal(), 0.0, 1.0);

    // Clinical + genomic columns. Squamous skews towards smokers and a shifted expression subset.
    const double age = std::round(rng.normal(66.0, 8.0));
    const double smoke_draw = rng.uniform() + (squamous ? 0.30 * sig : -0.10 * sig);
    const std::string smoking = smoke_draw < 0.30 ? "never" : (smoke_draw < 0.65 ? "former" : "current");
    const double pack_years =
        smoking == "never" ? 0.0 : std::max(0.0, std::round(rng.normal(25.0 + (squamous ? 12.0 * sig : 0.0), 12.0)));
    const std::string sex = rng.uniform() < (squamous ? 0.5 + 0.15 * sig : 0.5) ? "M" : "F";
    const double ecog = std::floor(rng.uniform(0.0, 3.0));
    const double tumor_mm = std::round(p.tumor_radius * 2.0 * 4.0 * 10.0) / 10.0;
    p.numeric = {age, pack_years, ecog, tumor_mm};
    for (int g = 0; g < 10; ++g) {
        double shift = 0.0;
        if (g < 3) shift = (squamous ? 0.35 : -0.35) * sig;
        p.numeric.push_back(std::round(rng.normal(shift, 1.0) * 1e4) / 1e4);
    }
    p.categorical = {sex, smoking};
    if (cfg.missing_rate > 0.0) {
        for (double& v : p.numeric)
            if (rng.uniform() < cfg.missing_rate) v = std::numeric_limits<double>::quiet_NaN();
        for (auto& c : p.categorical)
            if (rng.uniform() < cfg.missing_rate) c.clear();
    }
    return p;
}

/// Labels are assigned by exact class_balance rounding, then shuffled with the seed.
inline PhantomDataset generate_phantom(const PhantomConfig& cfg) {
    cfg.validate();
    const int n_a = static_cast<int>(std::lround(cfg.n_patients * cfg.class_balance));
    if (n_a < 1 || n_a >= cfg.n_patients) throw ContractError("phantom: class_balance leaves a class empty");
    std::vector<int> labels(cfg.n_patients, 1);
    std::fill(labels.begin(), labels.begin() + n_a, 0);
    Rng rng(Fnv1a().text("lungfuse-labels").u64(cfg.seed).value());
    rng.shuffle(labels);
    PhantomDataset ds{cfg, {}};
    ds.patients.reserve(cfg.n_patients);
    for (int i = 0; i < cfg.n_patients; ++i) ds.patients.push_back(generate_patient(cfg, i, labels[i]));
    return ds;
}

/// Clean PET images (CT frame, no noise, no jitter) for training the denoiser.
inline std::vector<ImageGray> generate_clean_pet_set(int n, int image_size, std::uint64_t seed) {
    PhantomConfig cfg;
    cfg.image_size = image_size;
    cfg.seed = seed;
    cfg.noise_sigma = 0.0;
    cfg.registration_jitter = 0.0;
    cfg.validate();
    std::vector<ImageGray> out;
    for (int i = 0; i < n; ++i) out.push_back(generate_patient(cfg, i, i % 2).pet_clean);
    return out;
}

/// Axial stack with the body in every slice and lungs only in slices [lung_first, lung_last].
/// Lung size tapers towards the ends of the lung range.
inline VolumeGray generate_phantom_volume(int n_slices, int lung_first, int lung_last, int image_size = 64,
                                          std::uint64_t seed = 42) {
    if (n_slices < 1 || lung_first < 0 || lung_last >= n_slices || lung_first > lung_last)
        throw ContractError("phantom volume: invalid slice range");
    Rng rng(Fnv1a().text("lungfuse-volume").u64(seed).value());
    const auto anatomy = phantom_detail::random_anatomy(rng, image_size);
    VolumeGray vol;
    vol.spacing = {0.8, 0.8, 2.5};
    const double mid = 0.5 * (lung_first + lung_last);
    const double half = 0.5 * (lung_last - lung_first) + 1.0;
    for (int z = 0; z < n_slices; ++z) {
        ImageGray slice(image_size, image_size);
        double lung_scale = 0.0;
        if (z >= lung_first && z <= lung_last) lung_scale = std::sqrt(std::max(0.25, 1.0 - std::pow((z - mid) / half, 2)));
        phantom_detail::render_ct_anatomy(slice, nullptr, anatomy, lung_scale);
        for (double& v : slice.data) v = std::clamp(v + 0.02 * rng.normal(), 0.0, 1.0);
        vol.slices.push_back(std::move(slice));
    }
    return vol;
}

namespace phantom_detail {

inline std::string format_number(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline nlohmann::json transform_json(const RigidTransform& t) {
    return {{"tx", t.tx}, {"ty", t.ty}, {"theta_deg", t.theta / kDegToRad}, {"scale", t.scale}};
}

}  // namespace phantom_detail

inline nlohmann::json phantom_config_json(const PhantomConfig& c) {
    return {{"n_patients", c.n_patients},       {"image_size", c.image_size},
            {"class_balance", c.class_balance}, {"noise_sigma", c.noise_sigma},
            {"registration_jitter", c.registration_jitter}, {"signal_strength", c.signal_strength},
            {"missing_rate", c.missing_rate},   {"seed", c.seed}};
}

/// Writes the dataset directory:
///   ct/<id>.pgm, pet/<id>.pgm, masks/<id>_lung.pgm
///   clinical.csv, schema.json, manifest.json, ground_truth.json
inline void write_phantom(const PhantomDataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto& names = phantom_class_names();
    const auto& num_cols = phantom_numeric_columns();
    const auto& cat_cols = phantom_categorical_columns();

    nlohmann::json manifest;
    manifest["schema_version"] = 1;
    manifest["classes"] = names;
    manifest["rows"] = nlohmann::json::array();
    nlohmann::json truth;
    truth["config"] = phantom_config_json(ds.config);
    truth["patients"] = nlohmann::json::array();

    std::ofstream csv(dir / "clinical.csv", std::ios::trunc);
    csv << "patient_id";
    for (const auto& c : num_cols) csv << "," << c;
    for (const auto& c : cat_cols) csv << "," << c;
    csv << ",subtype\n";

    for (const auto& p : ds.patients) {
        const std::string ct_rel = "ct/" + p.id + ".pgm";
        const std::string pet_rel = "pet/" + p.id + ".pgm";
        const std::string mask_rel = "masks/" + p.id + "_lung.pgm";
        write_image(p.ct, dir / ct_rel);
        write_image(p.pet, dir / pet_rel);
        write_image(write_mask_as_image(p.lung_truth), dir / mask_rel);

        csv << p.id;
        for (double v : p.numeric) csv << "," << phantom_detail::format_number(v);
        for (const auto& c : p.categorical) csv << "," << c;
        csv << "," << names[p.label] << "\n";

        manifest["rows"].push_back({{"id", p.id}, {"ct", ct_rel}, {"pet", pet_rel}, {"tabular_row_id", p.id},
                                    {"label", names[p.label]}});
        truth["patients"].push_back({{"id", p.id},
                                     {"label", names[p.label]},
                                     {"jitter", phantom_detail::transform_json(p.jitter)},
                                     {"tumor_center", {p.tumor_x, p.tumor_y}},
                                     {"tumor_radius", p.tumor_radius},
                                     {"texture_amplitude", p.texture_amplitude},
                                     {"hotspot_peak", p.hotspot_peak},
                                     {"hotspot_sigma", p.hotspot_sigma},
                                     {"lung_mask", mask_rel}});
    }

    nlohmann::json schema;
    schema["id_column"] = "patient_id";
    schema["label_column"] = "subtype";
    schema["classes"] = names;
    schema["missing_marker"] = "";
    schema["columns"] = nlohmann::json::array();
    for (const auto& c : num_cols) schema["columns"].push_back({{"name", c}, {"kind", "numeric"}});
    for (std::size_t i = 0; i < cat_cols.size(); ++i)
        schema["columns"].push_back(
            {{"name", cat_cols[i]}, {"kind", "categorical"}, {"categories", phantom_category_sets()[i]}});

    std::ofstream(dir / "manifest.json", std::ios::trunc) << manifest.dump(2) << "\n";
    std::ofstream(dir / "ground_truth.json", std::ios::trunc) << truth.dump(2) << "\n";
    std::ofstream(dir / "schema.json", std::ios::trunc) << schema.dump(2) << "\n";
}

}  // namespace lungfuse
