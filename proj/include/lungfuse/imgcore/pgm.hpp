#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "lungfuse/imgcore/image.hpp"

namespace lungfuse {

namespace pgm_detail {

struct Cursor {
    const std::vector<unsigned char>& buf;
    std::size_t pos = 0;

    void skip_space_and_comments() {
        while (pos < buf.size()) {
            if (buf[pos] == '#') {
                while (pos < buf.size() && buf[pos] != '\n') ++pos;
            } else if (std::isspace(buf[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    }

    long read_uint(const char* field) {
        skip_space_and_comments();
        const std::size_t start = pos;
        long v = 0;
        while (pos < buf.size() && std::isdigit(buf[pos])) {
            v = v * 10 + (buf[pos] - '0');
            if (v > 1'000'000'000L) throw FormatError(std::string("PGM ") + field + " too large", start);
            ++pos;
        }
        if (pos == start) throw FormatError(std::string("PGM: expected ") + field, start);
        return v;
    }
};

}  // namespace pgm_detail

/// Parses a binary 16-bit PGM ("P5", maxval 65535) from memory; samples are big-endian.
inline ImageGray decode_pgm16(const std::vector<unsigned char>& buf) {
    pgm_detail::Cursor cur{buf};
    if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '5') throw FormatError("PGM: missing P5 magic", 0);
    cur.pos = 2;
    const std::size_t width_at = cur.pos;
    const long w = cur.read_uint("width");
    const long h = cur.read_uint("height");
    const std::size_t maxval_at = cur.pos;
    const long maxval = cur.read_uint("maxval");
    if (w < 1 || h < 1) throw FormatError("PGM: zero dimension", width_at);
    if (maxval != 65535) throw FormatError("PGM: unsupported maxval " + std::to_string(maxval), maxval_at);
    if (cur.pos >= buf.size() || !std::isspace(buf[cur.pos]))
        throw FormatError("PGM: missing whitespace after header", cur.pos);
    ++cur.pos;
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (buf.size() - cur.pos < 2 * n) throw FormatError("PGM: truncated payload", buf.size());
    ImageGray img(static_cast<int>(w), static_cast<int>(h));
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned v = (static_cast<unsigned>(buf[cur.pos]) << 8) | buf[cur.pos + 1];
        cur.pos += 2;
        img.data[i] = static_cast<double>(v) / 65535.0;
    }
    return img;
}

inline std::vector<unsigned char> encode_pgm16(const ImageGray& img) {
    img.validate();
    std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n65535\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.reserve(out.size() + 2 * img.size());
    for (double v : img.data) {
        if (v < 0.0 || v > 1.0) throw ContractError("write_image: value outside [0,1]: " + std::to_string(v));
        const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
        out.push_back(static_cast<unsigned char>(q >> 8));
        out.push_back(static_cast<unsigned char>(q & 0xff));
    }
    return out;
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

inline ImageGray read_image(const std::filesystem::path& path) {
    try {
        return decode_pgm16(read_file_bytes(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what(), e.offset());
    }
}

/// Writes P5/65535; each value v in [0,1] is stored as round(v * 65535).
inline void write_image(const ImageGray& img, const std::filesystem::path& path) {
    write_file_bytes(path, encode_pgm16(img));
}

inline ImageGray write_mask_as_image(const BinaryMask& m) {
    ImageGray img(m.width, m.height);
    for (std::size_t i = 0; i < m.data.size(); ++i) img.data[i] = m.data[i] ? 1.0 : 0.0;
    return img;
}

inline BinaryMask image_to_mask(const ImageGray& img) {
    BinaryMask m(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) m.data[i] = img.data[i] >= 0.5 ? 1 : 0;
    return m;
}

}  // namespace lungfuse
