#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "lungfuse/core/rng.hpp"
#include "lungfuse/fusion.hpp"
#include "lungfuse/phantom/generator.hpp"

using namespace lungfuse;

namespace {

ImageGray random_image(int w, int h, std::uint64_t seed) {
    Rng r(seed);
    ImageGray img(w, h);
    for (double& v : img.data) v = r.uniform();
    return img;
}

ImageGray impulse(int w, int h, int x, int y) {
    ImageGray img(w, h);
    img.at(x, y) = 1.0;
    return img;
}

PhantomDataset aligned_phantoms(int n) {
    PhantomConfig cfg;
    cfg.n_patients = std::max(n, 2);
    cfg.registration_jitter = 0.0;
    return generate_phantom(cfg);
}

}  // namespace

TEST(Resample, IdentityUnchanged) {
    const ImageGray x = random_image(13, 9, 1);
    EXPECT_EQ(resample_bilinear(x, RigidTransform::identity()), x);
}

TEST(Resample, IntegerShiftMovesImpulse) {
    const ImageGray out = resample_bilinear(impulse(9, 9, 4, 4), {1, 0, 0, 1});
    EXPECT_DOUBLE_EQ(out.at(5, 4), 1.0);
    double total = 0;
    for (double v : out.data) total += v;
    EXPECT_DOUBLE_EQ(total, 1.0);
}

TEST(Resample, HalfPixelShiftSplitsImpulse) {
    const ImageGray out = resample_bilinear(impulse(9, 9, 4, 4), {0.5, 0, 0, 1});
    EXPECT_DOUBLE_EQ(out.at(4, 4), 0.5);
    EXPECT_DOUBLE_EQ(out.at(5, 4), 0.5);
    double total = 0;
    for (double v : out.data) total += v;
    EXPECT_DOUBLE_EQ(total, 1.0);
}

TEST(Resample, OutOfBoundsIsZero) {
    const ImageGray out = resample_bilinear(ImageGray(8, 8, 1.0), {20, 0, 0, 1});
    for (double v : out.data) EXPECT_EQ(v, 0.0);
}

TEST(RigidTransform, InverseComposesToIdentity) {
    const RigidTransform t{2.5, -1.25, 0.3, 1.07};
    const auto inv = t.inverse();
    for (auto [x, y] : {std::pair{0.0, 0.0}, {3.0, -7.0}, {-11.5, 4.25}}) {
        const auto [u, v] = t.apply(x, y);
        const auto [bx, by] = inv.apply(u, v);
        EXPECT_NEAR(bx, x, 1e-12);
        EXPECT_NEAR(by, y, 1e-12);
    }
    EXPECT_THROW((RigidTransform{0, 0, 0, 0}.inverse()), ContractError);
}

TEST(Resample, ForwardThenInverseRestoresInterior) {
    const auto ds = aligned_phantoms(1);
    const ImageGray& ct = ds.patients[0].ct;
    const RigidTransform t{3.0, -2.0, 0.0, 1.0};
    const ImageGray back = resample_bilinear(resample_bilinear(ct, t), t.inverse());
    for (int y = 8; y < 56; ++y)
        for (int x = 8; x < 56; ++x) EXPECT_NEAR(back.at(x, y), ct.at(x, y), 1e-12);
}

TEST(Ncc, Basics) {
    const ImageGray a = random_image(16, 16, 2);
    ImageGray b = a;
    for (double& v : b.data) v = 3 * v + 1;
    EXPECT_NEAR(normalized_cross_correlation(a, b), 1.0, 1e-12);
    for (double& v : b.data) v = -v;
    EXPECT_NEAR(normalized_cross_correlation(a, b), -1.0, 1e-12);
}

TEST(Register, SelfIsIdentity) {
    const auto ds = aligned_phantoms(1);
    const auto r = register_rigid(ds.patients[0].ct, ds.patients[0].ct);
    EXPECT_EQ(r.transform.tx, 0.0);
    EXPECT_EQ(r.transform.ty, 0.0);
    EXPECT_EQ(r.transform.theta, 0.0);
    EXPECT_NEAR(r.transform.scale, 1.0, 1e-12);
    EXPECT_NEAR(r.ncc, 1.0, 1e-12);
}

TEST(Register, RecoversIntegerShift) {
    const auto ds = aligned_phantoms(1);
    const ImageGray& fixed = ds.patients[0].ct;
    const ImageGray moving = resample_bilinear(fixed, {3, -2, 0, 1});

    // exhaustive integer-grid oracle
    double best = -2;
    int bx = 0, by = 0;
    for (int ty = -8; ty <= 8; ++ty)
        for (int tx = -8; tx <= 8; ++tx) {
            const double s = normalized_cross_correlation(
                fixed, resample_bilinear(moving, {double(tx), double(ty), 0, 1}));
            if (s > best) best = s, bx = tx, by = ty;
        }
    EXPECT_EQ(bx, -3);
    EXPECT_EQ(by, 2);

    const auto r = register_rigid(fixed, moving);
    EXPECT_NEAR(r.transform.tx, -3.0, 0.5);
    EXPECT_NEAR(r.transform.ty, 2.0, 0.5);
    EXPECT_NEAR(r.transform.theta / kDegToRad, 0.0, 0.5);
}

TEST(Register, ConstantImageHasNoSignal) {
    const auto ds = aligned_phantoms(1);
    try {
        register_rigid(ImageGray(64, 64, 0.4), ds.patients[0].ct);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("no correlation signal"), std::string::npos);
    }
    EXPECT_THROW(register_rigid(ds.patients[0].ct, ImageGray(64, 64, 0.4)), DataError);
}

TEST(Fuse, IdempotentOnIdenticalInputs) {
    for (auto fam : {WaveletFamily::haar, WaveletFamily::db2})
        for (std::uint64_t s = 0; s < 5; ++s) {
            const ImageGray x = random_image(32, 32, 10 + s);
            for (const auto& rule : {FusionRule{}, FusionRule{FusionRule::Approx::weighted, 0.8,
                                                              FusionRule::Detail::average}}) {
                const ImageGray f = fuse_wavelet(x, x, fam, 2, rule);
                for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(f.data[i], x.data[i], 1e-6);
            }
        }
}

TEST(Fuse, ZeroPetHalvesApproximation) {
    const ImageGray ct = random_image(32, 32, 20);
    const ImageGray fused = fuse_wavelet(ct, ImageGray(32, 32, 0.0));
    auto p = dwt2(ct);
    for (double& v : p.ll.data) v *= 0.5;
    const ImageGray expected = clamp_unit(idwt2(p));
    for (std::size_t i = 0; i < ct.size(); ++i) EXPECT_NEAR(fused.data[i], expected.data[i], 1e-12);
}

TEST(Fuse, MaxAbsPicksASourceCoefficientTiesToCt) {
    const auto a = dwt2(random_image(16, 16, 30), WaveletFamily::db2, 2);
    auto b = dwt2(random_image(16, 16, 31), WaveletFamily::db2, 2);
    b.details[0].lh.data[3] = -a.details[0].lh.data[3];  // |tie|
    const auto f = fuse_pyramids(a, b, FusionRule{});
    for (int l = 0; l < 2; ++l) {
        const ImageGray* fa[] = {&a.details[l].lh, &a.details[l].lv, &a.details[l].ld};
        const ImageGray* fb[] = {&b.details[l].lh, &b.details[l].lv, &b.details[l].ld};
        const ImageGray* ff[] = {&f.details[l].lh, &f.details[l].lv, &f.details[l].ld};
        for (int k = 0; k < 3; ++k)
            for (std::size_t i = 0; i < ff[k]->size(); ++i) {
                const double v = ff[k]->data[i];
                EXPECT_TRUE(v == fa[k]->data[i] || v == fb[k]->data[i]);
                EXPECT_EQ(std::abs(v), std::max(std::abs(fa[k]->data[i]), std::abs(fb[k]->data[i])));
            }
    }
    EXPECT_EQ(f.details[0].lh.data[3], a.details[0].lh.data[3]);
    for (std::size_t i = 0; i < f.ll.size(); ++i) EXPECT_NEAR(f.ll.data[i], 0.5 * (a.ll.data[i] + b.ll.data[i]), 1e-15);
}

TEST(Fuse, WeightedRule) {
    const ImageGray ct = random_image(16, 16, 40), pet = random_image(16, 16, 41);
    FusionRule r;
    parse_ll_rule("weighted:0.7", r);
    EXPECT_EQ(r.ll_rule, FusionRule::Approx::weighted);
    EXPECT_DOUBLE_EQ(r.ct_weight, 0.7);
    const auto f = fuse_pyramids(dwt2(ct), dwt2(pet), r);
    const auto pc = dwt2(ct), pp = dwt2(pet);
    for (std::size_t i = 0; i < f.ll.size(); ++i) EXPECT_NEAR(f.ll.data[i], 0.7 * pc.ll.data[i] + 0.3 * pp.ll.data[i], 1e-15);
    EXPECT_THROW(parse_ll_rule("weighted:1.5", r), ContractError);
    EXPECT_THROW(parse_ll_rule("weighted:x", r), ContractError);
    EXPECT_THROW(parse_detail_rule("min"), ContractError);
}

TEST(Fuse, DimensionMismatch) {
    EXPECT_THROW(fuse_wavelet(ImageGray(16, 16), ImageGray(16, 8)), ContractError);
}

TEST(Fuse, OutputClampedToUnit) {
    ImageGray ct(16, 16), pet(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            ct.at(x, y) = (x / 2 + y / 2) % 2 ? 1.0 : 0.0;
            pet.at(x, y) = (x + y) % 2 ? 1.0 : 0.0;
        }
    const ImageGray f = fuse_wavelet(ct, pet, WaveletFamily::db2, 2);
    EXPECT_GE(f.min(), 0.0);
    EXPECT_LE(f.max(), 1.0);
}

TEST(Fuse, FusedCarriesBothSources) {
    // CT carries anatomy only, PET a lone hotspot inside the right lung
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        Rng rng(seed);
        const auto anatomy = phantom_detail::random_anatomy(rng, 64);
        ImageGray ct(64, 64), pet(64, 64);
        phantom_detail::render_ct_anatomy(ct, nullptr, anatomy);
        const auto& lung = anatomy.lungs[1];
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                const double dx = x - lung.cx, dy = y - lung.cy;
                pet.at(x, y) = 0.8 * std::exp(-(dx * dx + dy * dy) / 18.0);
            }
        const ImageGray fused = fuse_wavelet(ct, pet);
        const double cross = mutual_information(ct, pet);
        EXPECT_GT(mutual_information(fused, ct), cross) << seed;
        EXPECT_GT(mutual_information(fused, pet), cross) << seed;
    }
}

TEST(Fuse, SsimRetainsStructure) {
    const auto ds = aligned_phantoms(10);
    for (const auto& p : ds.patients) {
        const ImageGray fused = fuse_wavelet(p.ct, p.pet);
        EXPECT_GE(ssim(fused, p.ct), ssim(p.pet, p.ct)) << p.id;
    }
}

TEST(Quality, EntropyExamples) {
    EXPECT_EQ(shannon_entropy(ImageGray(8, 8, 0.3)), 0.0);
    ImageGray two(8, 8);
    for (std::size_t i = 0; i < two.size(); ++i) two.data[i] = i % 2 ? 1.0 : 0.0;
    EXPECT_NEAR(shannon_entropy(two), 1.0, 1e-12);
}

TEST(Quality, SelfInformation) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const ImageGray x = random_image(32, 32, 60 + s);
        EXPECT_NEAR(mutual_information(x, x), shannon_entropy(x, 64), 1e-9);
        EXPECT_EQ(ssim(x, x), 1.0);
        EXPECT_TRUE(std::isinf(psnr(x, x)));
    }
}

TEST(Quality, IndependentImagesHaveLowMi) {
    // large sample: the plug-in estimator is biased upwards by roughly bins^2 / (2N ln 2)
    const ImageGray a = random_image(256, 256, 70), b = random_image(256, 256, 71);
    EXPECT_LT(mutual_information(a, b), 0.1 * mutual_information(a, a));
}

TEST(Quality, PsnrOfKnownOffset) {
    ImageGray a(8, 8, 0.5), b(8, 8, 0.6);
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);  // mse 0.01
}

TEST(Quality, ReportFields) {
    const auto ds = aligned_phantoms(1);
    const auto& p = ds.patients[0];
    const ImageGray fused = fuse_wavelet(p.ct, p.pet);
    const auto q = fusion_quality(fused, p.ct, p.pet);
    EXPECT_DOUBLE_EQ(q.entropy_fused, shannon_entropy(fused));
    EXPECT_DOUBLE_EQ(q.mi_fused_ct, mutual_information(fused, p.ct));
    EXPECT_DOUBLE_EQ(q.mi_fused_pet, mutual_information(fused, p.pet));
    EXPECT_DOUBLE_EQ(q.psnr_vs_ct, psnr(fused, p.ct));
    EXPECT_DOUBLE_EQ(q.ssim_vs_ct, ssim(fused, p.ct));
}
