#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lungfuse/imgcore/pgm.hpp"

namespace lungfuse {

/// Ordered stack of equally-sized slices. Spacing (dx, dy, dz) in mm is carried as metadata.
struct VolumeGray {
    std::vector<ImageGray> slices;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};

    void validate() const {
        if (slices.empty()) throw ContractError("VolumeGray: at least one slice required");
        for (const auto& s : slices) {
            s.validate();
            if (s.width != slices.front().width || s.height != slices.front().height)
                throw ContractError("VolumeGray: slice dimensions differ");
        }
    }
};

inline std::string slice_filename(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "slice_%04zu.pgm", i);
    return buf;
}

/// Directory layout: slice_0000.pgm, slice_0001.pgm, ... plus meta.json {"spacing": [dx, dy, dz], "slices": n}.
inline void write_volume(const VolumeGray& vol, const std::filesystem::path& dir) {
    vol.validate();
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < vol.slices.size(); ++i) write_image(vol.slices[i], dir / slice_filename(i));
    nlohmann::json meta;
    meta["spacing"] = vol.spacing;
    meta["slices"] = vol.slices.size();
    std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";
}

inline VolumeGray read_volume(const std::filesystem::path& dir) {
    std::ifstream in(dir / "meta.json");
    if (!in) throw DataError("volume: missing meta.json in " + dir.string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("volume meta.json: " + std::string(e.what()), e.byte);
    }
    VolumeGray vol;
    vol.spacing = meta.at("spacing").get<std::array<double, 3>>();
    const auto n = meta.at("slices").get<std::size_t>();
    for (std::size_t i = 0; i < n; ++i) vol.slices.push_back(read_image(dir / slice_filename(i)));
    vol.validate();
    return vol;
}

}  // namespace lungfuse
