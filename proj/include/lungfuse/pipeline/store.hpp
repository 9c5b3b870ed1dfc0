#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lungfuse/core/hash.hpp"
#include "lungfuse/core/matrix.hpp"
#include "lungfuse/imgcore/image.hpp"

namespace lungfuse {

/// Lossless binary container for stage outputs:
///   "LFA1", u64 count, then per array: u64 rows, u64 cols, rows*cols float64 (little-endian).
/// Images are stored as rows=height, cols=width.
namespace store_detail {

inline void put_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(const std::vector<unsigned char>& buf, std::size_t& pos) {
    if (pos + 8 > buf.size()) throw FormatError("array store: truncated", pos);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
    pos += 8;
    return v;
}

}  // namespace store_detail

inline void write_arrays(const std::filesystem::path& path, const std::vector<Matrix>& arrays) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write("LFA1", 4);
    store_detail::put_u64(out, arrays.size());
    for (const auto& m : arrays) {
        store_detail::put_u64(out, m.rows);
        store_detail::put_u64(out, m.cols);
        for (double v : m.data) store_detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    if (!out) throw DataError("write failed: " + path.string());
}

inline std::vector<Matrix> read_arrays(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 4 || std::string(buf.begin(), buf.begin() + 4) != "LFA1")
        throw FormatError(path.string() + ": not an array store", 0);
    std::size_t pos = 4;
    const auto n = store_detail::get_u64(buf, pos);
    std::vector<Matrix> out;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto rows = store_detail::get_u64(buf, pos);
        const auto cols = store_detail::get_u64(buf, pos);
        if (rows * cols > (buf.size() - pos) / 8) throw FormatError(path.string() + ": truncated array", pos);
        Matrix m(rows, cols);
        for (double& v : m.data) v = std::bit_cast<double>(store_detail::get_u64(buf, pos));
        out.push_back(std::move(m));
    }
    return out;
}

inline Matrix image_as_matrix(const ImageGray& img) {
    Matrix m(static_cast<std::size_t>(img.height), static_cast<std::size_t>(img.width));
    m.data = img.data;
    return m;
}

inline ImageGray matrix_as_image(const Matrix& m) {
    return ImageGray(static_cast<int>(m.cols), static_cast<int>(m.rows), m.data);
}

inline void write_images(const std::filesystem::path& path, const std::vector<ImageGray>& imgs) {
    std::vector<Matrix> arrays;
    for (const auto& i : imgs) arrays.push_back(image_as_matrix(i));
    write_arrays(path, arrays);
}

inline std::vector<ImageGray> read_images(const std::filesystem::path& path) {
    std::vector<ImageGray> out;
    for (const auto& m : read_arrays(path)) out.push_back(matrix_as_image(m));
    return out;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

/// On-disk cache of stage outputs, one directory per (stage, content key).
/// Outputs are written to a temporary sibling and renamed into place once complete.
class StageCache {
public:
    explicit StageCache(std::filesystem::path root) : root_(std::move(root)) {}

    std::filesystem::path dir(const std::string& stage, std::uint64_t key) const {
        return root_ / (stage + "-" + Fnv1a::to_hex(key));
    }

    bool has(const std::string& stage, std::uint64_t key) const {
        return std::filesystem::exists(dir(stage, key) / ".complete");
    }

    /// Returns a fresh scratch directory to fill, then call commit().
    std::filesystem::path begin(const std::string& stage, std::uint64_t key) const {
        const auto tmp = root_ / (stage + "-" + Fnv1a::to_hex(key) + ".partial");
        std::filesystem::remove_all(tmp);
        std::filesystem::create_directories(tmp);
        return tmp;
    }

    std::filesystem::path commit(const std::string& stage, std::uint64_t key) const {
        const auto tmp = root_ / (stage + "-" + Fnv1a::to_hex(key) + ".partial");
        std::ofstream(tmp / ".complete") << "ok\n";
        const auto final_dir = dir(stage, key);
        std::filesystem::remove_all(final_dir);
        std::filesystem::rename(tmp, final_dir);
        return final_dir;
    }

private:
    std::filesystem::path root_;
};

}  // namespace lungfuse
