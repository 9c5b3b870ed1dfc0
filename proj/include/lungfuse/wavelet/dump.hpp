#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "lungfuse/imgcore/pgm.hpp"
#include "lungfuse/wavelet/dwt2.hpp"

namespace lungfuse {

/// Debug dump: one PGM per band, each rescaled affinely to [0,1], plus
/// bands.json recording {file, min, max} so raw values can be recovered.
inline void dump_pyramid(const WaveletPyramid& pyr, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json side;
    side["family"] = to_string(pyr.family);
    side["levels"] = pyr.levels;
    side["original_dims"] = {pyr.width, pyr.height};
    auto emit = [&](const ImageGray& band, const std::string& name) {
        const double lo = band.min(), hi = band.max();
        ImageGray scaled(band.width, band.height, 0.0);
        if (hi > lo)
            for (std::size_t i = 0; i < band.size(); ++i) scaled.data[i] = (band.data[i] - lo) / (hi - lo);
        write_image(scaled, dir / (name + ".pgm"));
        side["bands"][name] = {{"file", name + ".pgm"}, {"min", lo}, {"max", hi}};
    };
    emit(pyr.ll, "ll" + std::to_string(pyr.levels));
    for (int l = 0; l < pyr.levels; ++l) {
        const std::string s = std::to_string(l + 1);
        emit(pyr.details[l].lh, "lh" + s);
        emit(pyr.details[l].lv, "lv" + s);
        emit(pyr.details[l].ld, "ld" + s);
    }
    std::ofstream(dir / "bands.json") << side.dump(2) << "\n";
}

}  // namespace lungfuse
