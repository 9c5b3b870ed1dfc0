#include <gtest/gtest.h>

#include <filesystem>

#include "lungfuse/core/rng.hpp"
#include "lungfuse/imgcore.hpp"
#include "lungfuse/phantom/generator.hpp"

using namespace lungfuse;
namespace fs = std::filesystem;

namespace {

ImageGray random_image(int w, int h, std::uint64_t seed) {
    Rng r(seed);
    ImageGray img(w, h);
    for (double& v : img.data) v = r.uniform();
    return img;
}

fs::path temp_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("lungfuse_test_imgcore_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<unsigned char> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Pgm, DecodesMaxvalScaling) {
    auto buf = bytes_of("P5\n2 2\n65535\n");
    for (unsigned v : {0u, 65535u, 0u, 65535u}) {
        buf.push_back(static_cast<unsigned char>(v >> 8));
        buf.push_back(static_cast<unsigned char>(v & 0xff));
    }
    const ImageGray img = decode_pgm16(buf);
    ASSERT_EQ(img.width, 2);
    ASSERT_EQ(img.height, 2);
    EXPECT_EQ(img.data, (std::vector<double>{0, 1, 0, 1}));
}

TEST(Pgm, ZeroDimensionIsFormatError) {
    auto buf = bytes_of("P5 0 4 65535\n");
    buf.resize(buf.size() + 16, 0);
    EXPECT_THROW(decode_pgm16(buf), FormatError);
}

TEST(Pgm, MalformedInputsReportOffset) {
    try {
        decode_pgm16(bytes_of("P2\n2 2\n65535\n"));
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 0u);
    }
    EXPECT_THROW(decode_pgm16(bytes_of("P5\n2 2\n255\n1234")), FormatError);
    auto truncated = bytes_of("P5\n2 2\n65535\n");
    truncated.resize(truncated.size() + 5, 0);
    EXPECT_THROW(decode_pgm16(truncated), FormatError);
    EXPECT_THROW(decode_pgm16(bytes_of("P5\n# comment\n2 x\n")), FormatError);
}

TEST(Pgm, CommentsInHeader) {
    auto buf = bytes_of("P5 # c\n1 # w\n1\n65535\n");
    buf.push_back(0x80);
    buf.push_back(0x00);
    EXPECT_NEAR(decode_pgm16(buf).data[0], 32768.0 / 65535.0, 1e-15);
}

TEST(Pgm, EncodesHalfAndOne) {
    const auto half = encode_pgm16(ImageGray(3, 2, 0.5));
    const std::size_t header = std::string("P5\n3 2\n65535\n").size();
    ASSERT_EQ(half.size(), header + 12);
    for (std::size_t i = header; i < half.size(); i += 2) EXPECT_EQ((half[i] << 8) | half[i + 1], 32768);
    const auto one = encode_pgm16(ImageGray(1, 1, 1.0));
    EXPECT_EQ((one[one.size() - 2] << 8) | one.back(), 65535);
}

TEST(Pgm, OutOfRangeWriteIsContractError) {
    EXPECT_THROW(encode_pgm16(ImageGray(1, 1, 1.5)), ContractError);
    EXPECT_THROW(encode_pgm16(ImageGray(1, 1, -0.1)), ContractError);
}

TEST(Pgm, RoundTripWithinQuantum) {
    const auto dir = temp_dir("roundtrip");
    const ImageGray img = random_image(64, 64, 11);
    write_image(img, dir / "a.pgm");
    const ImageGray back = read_image(dir / "a.pgm");
    ASSERT_EQ(back.width, 64);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_LE(std::abs(back.data[i] - img.data[i]), 1.0 / 65535);
    write_image(back, dir / "b.pgm");
    const ImageGray again = read_image(dir / "b.pgm");
    EXPECT_EQ(again, back);
    EXPECT_EQ(read_file_bytes(dir / "a.pgm"), read_file_bytes(dir / "b.pgm"));
    fs::remove_all(dir);
}

TEST(Pgm, MissingFileIsDataError) { EXPECT_THROW(read_image("/nonexistent/x.pgm"), DataError); }

TEST(Image, RejectsBadConstruction) {
    EXPECT_THROW(ImageGray(0, 4), ContractError);
    EXPECT_THROW(ImageGray(2, 2, std::vector<double>{1, 2, 3}), ContractError);
    EXPECT_THROW(ImageGray(1, 1, std::vector<double>{std::nan("")}), ContractError);
}

TEST(Normalize, Examples) {
    const ImageGray out = normalize_unit(ImageGray(2, 2, std::vector<double>{2, 4, 6, 8}));
    EXPECT_NEAR(out.data[0], 0.0, 1e-15);
    EXPECT_NEAR(out.data[1], 1.0 / 3, 1e-15);
    EXPECT_NEAR(out.data[2], 2.0 / 3, 1e-15);
    EXPECT_NEAR(out.data[3], 1.0, 1e-15);
    EXPECT_EQ(normalize_unit(ImageGray(2, 2, 5.0)).data, std::vector<double>(4, 0.0));
    const ImageGray unit(2, 2, std::vector<double>{0, 0.25, 0.7, 1});
    EXPECT_EQ(normalize_unit(unit), unit);
}

TEST(Normalize, RangeAndIdempotence) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        ImageGray img = random_image(17, 9, s);
        for (double& v : img.data) v = v * 300 - 70;
        const ImageGray once = normalize_unit(img);
        EXPECT_GE(once.min(), 0.0);
        EXPECT_LE(once.max(), 1.0);
        const ImageGray twice = normalize_unit(once);
        for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(twice.data[i], once.data[i], 1e-15);
    }
}

TEST(Equalize, ConstantStaysConstant) {
    const ImageGray out = equalize_contrast(ImageGray(4, 4, 0.3));
    for (double v : out.data) EXPECT_EQ(v, out.data[0]);
}

TEST(Equalize, TwoValueImage) {
    ImageGray img(4, 2);
    for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = i % 2 ? 0.8 : 0.2;
    const ImageGray out = equalize_contrast(img);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_DOUBLE_EQ(out.data[i], i % 2 ? 1.0 : 0.5);
}

TEST(Equalize, RampIsNearIdentity) {
    ImageGray ramp(256, 1);
    for (int i = 0; i < 256; ++i) ramp.data[i] = i / 255.0;
    const ImageGray out = equalize_contrast(ramp, 256);
    for (int i = 0; i < 256; ++i) EXPECT_LE(std::abs(out.data[i] - ramp.data[i]), 1.0 / 256 + 1e-12);
}

TEST(Equalize, MonotoneOnRandomImages) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const ImageGray img = random_image(32, 32, 100 + s);
        const ImageGray out = equalize_contrast(img, 64);
        for (std::size_t i = 0; i < img.size(); ++i)
            for (std::size_t j = 0; j < img.size(); j += 37)
                if (img.data[i] <= img.data[j]) EXPECT_LE(out.data[i], out.data[j]);
        EXPECT_GE(out.min(), 0.0);
        EXPECT_LE(out.max(), 1.0);
    }
}

TEST(Equalize, Errors) {
    EXPECT_THROW(equalize_contrast(ImageGray(2, 2, 0.5), 1), ContractError);
    EXPECT_THROW(equalize_contrast(ImageGray(2, 2, 1.5)), ContractError);
}

TEST(LungMask, AllBrightIsEmpty) { EXPECT_EQ(lung_mask(ImageGray(32, 32, 0.9)).count(), 0u); }

TEST(LungMask, BorderFrameIsEmpty) {
    ImageGray img(32, 32, 0.9);
    for (int i = 0; i < 32; ++i) {
        img.at(i, 0) = img.at(i, 31) = img.at(0, i) = img.at(31, i) = 0.0;
        img.at(i, 1) = img.at(1, i) = 0.0;
    }
    EXPECT_EQ(lung_mask(img).count(), 0u);
}

TEST(LungMask, SmallRegionsDropped) {
    ImageGray img(32, 32, 0.9);
    for (int y = 10; y < 13; ++y)
        for (int x = 10; x < 13; ++x) img.at(x, y) = 0.1;  // 9 px
    for (int y = 20; y < 25; ++y)
        for (int x = 20; x < 25; ++x) img.at(x, y) = 0.1;  // 25 px
    const BinaryMask m = lung_mask(img);
    EXPECT_EQ(m.count(), 25u);
    EXPECT_TRUE(m.at(22, 22));
    EXPECT_FALSE(m.at(11, 11));
}

TEST(LungMask, PhantomJaccard) {
    PhantomConfig cfg;
    cfg.n_patients = 20;
    const auto ds = generate_phantom(cfg);
    for (const auto& p : ds.patients) EXPECT_GE(jaccard(lung_mask(p.ct), p.lung_truth), 0.95) << p.id;
}

TEST(LungMask, InvariantToShiftThenRenormalize) {
    PhantomConfig cfg;
    cfg.n_patients = 4;
    const auto ds = generate_phantom(cfg);
    for (const auto& p : ds.patients) {
        const ImageGray base = normalize_unit(p.ct);
        ImageGray shifted = p.ct;
        for (double& v : shifted.data) v += 3.25;
        EXPECT_EQ(lung_mask(normalize_unit(shifted)), lung_mask(base));
    }
}

TEST(LungField, FillsEnclosedHoles) {
    BinaryMask ring(7, 7);
    for (int y = 1; y < 6; ++y)
        for (int x = 1; x < 6; ++x) ring.set(x, y, x == 1 || x == 5 || y == 1 || y == 5);
    const BinaryMask filled = fill_holes(ring);
    EXPECT_EQ(filled.count(), 25u);
    EXPECT_TRUE(filled.at(3, 3));
    EXPECT_FALSE(filled.at(0, 0));
    const ImageGray masked = apply_mask(ImageGray(7, 7, 0.4), filled);
    EXPECT_EQ(masked.at(3, 3), 0.4);
    EXPECT_EQ(masked.at(0, 3), 0.0);
}

TEST(LungField, CoversTumourInsideLung) {
    PhantomConfig cfg;
    cfg.n_patients = 10;
    const auto ds = generate_phantom(cfg);
    for (const auto& p : ds.patients) {
        const BinaryMask field = lung_field(p.ct);
        EXPECT_TRUE(field.at(static_cast<int>(std::lround(p.tumor_x)), static_cast<int>(std::lround(p.tumor_y)))) << p.id;
        EXPECT_GE(field.count(), lung_mask(p.ct).count());
    }
}

TEST(FilterSlices, AllBrightVolumeFails) {
    VolumeGray vol;
    for (int i = 0; i < 3; ++i) vol.slices.push_back(ImageGray(32, 32, 0.9));
    try {
        filter_lung_slices(vol);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("no lung slices"), std::string::npos);
    }
}

TEST(FilterSlices, KeepsLungRange) {
    const VolumeGray vol = generate_phantom_volume(10, 2, 8);
    const VolumeGray kept = filter_lung_slices(vol);
    ASSERT_EQ(kept.slices.size(), 7u);
    for (int i = 0; i < 7; ++i) EXPECT_EQ(kept.slices[i], vol.slices[2 + i]);
    EXPECT_EQ(filter_lung_slices(vol, kDefaultLungThreshold, 0.0).slices.size(), 10u);
}

TEST(Volume, WriteReadRoundTrip) {
    const auto dir = temp_dir("volume");
    const VolumeGray vol = generate_phantom_volume(4, 1, 2, 32);
    write_volume(vol, dir / "v");
    EXPECT_TRUE(fs::exists(dir / "v" / "slice_0003.pgm"));
    const VolumeGray back = read_volume(dir / "v");
    ASSERT_EQ(back.slices.size(), 4u);
    EXPECT_EQ(back.spacing, vol.spacing);
    for (std::size_t s = 0; s < 4; ++s)
        for (std::size_t i = 0; i < back.slices[s].size(); ++i)
            EXPECT_LE(std::abs(back.slices[s].data[i] - vol.slices[s].data[i]), 1.0 / 65535);
    fs::remove_all(dir);
}
