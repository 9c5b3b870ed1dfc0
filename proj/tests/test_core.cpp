#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "lungfuse/core/adam.hpp"
#include "lungfuse/core/hash.hpp"
#include "lungfuse/core/matrix.hpp"
#include "lungfuse/core/parallel.hpp"
#include "lungfuse/core/rng.hpp"

using namespace lungfuse;

TEST(Rng, SameSeedSameStream) {
    Rng a(7), b(7), c(8);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        differs |= x != c.next();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, UniformAndIndexRanges) {
    Rng r(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(r.index(7), 7u);
    }
}

TEST(Rng, NormalMoments) {
    Rng r(3);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = r.normal();
        s += v;
        s2 += v * v;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, PoissonMean) {
    Rng r(5);
    for (double mean : {3.0, 200.0}) {
        double s = 0;
        for (int i = 0; i < 20000; ++i) s += static_cast<double>(r.poisson(mean));
        EXPECT_NEAR(s / 20000, mean, 0.05 * mean);
    }
    EXPECT_EQ(r.poisson(0.0), 0u);
}

TEST(Rng, ShuffleIsPermutation) {
    Rng r(9);
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    r.shuffle(v);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Fnv1a, KnownVectors) {
    // Reference values of 64-bit FNV-1a.
    EXPECT_EQ(Fnv1a().value(), 0xcbf29ce484222325ULL);
    EXPECT_EQ(Fnv1a().bytes("a", 1).value(), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(Fnv1a().bytes("foobar", 6).value(), 0x85944171f73967e8ULL);
    EXPECT_EQ(Fnv1a::to_hex(0xabcULL), "0000000000000abc");
}

TEST(Fnv1a, TextIsLengthPrefixed) {
    EXPECT_NE(Fnv1a().text("ab").text("c").value(), Fnv1a().text("a").text("bc").value());
}

TEST(Matrix, SelectAndConcat) {
    Matrix m(2, 3);
    for (std::size_t i = 0; i < 6; ++i) m.data[i] = static_cast<double>(i);
    const std::vector<std::size_t> rows{1}, cols{2, 0};
    EXPECT_EQ(m.select_rows(rows).data, (std::vector<double>{3, 4, 5}));
    EXPECT_EQ(m.select_cols(cols).data, (std::vector<double>{2, 0, 5, 3}));
    const Matrix c = hconcat(m, m.select_cols(cols));
    EXPECT_EQ(c.cols, 5u);
    EXPECT_EQ(c.data, (std::vector<double>{0, 1, 2, 2, 0, 3, 4, 5, 5, 3}));
    EXPECT_EQ(hconcat(Matrix(), m), m);
    EXPECT_THROW(hconcat(m, Matrix(3, 1)), ContractError);
}

TEST(Matrix, AppendRowChecksWidth) {
    Matrix m;
    const std::vector<double> a{1, 2}, b{1, 2, 3};
    m.append_row(a);
    EXPECT_EQ(m.rows, 1u);
    EXPECT_THROW(m.append_row(b), ContractError);
}

TEST(Adam, MinimizesQuadratic) {
    std::vector<double> p{3.0, -2.0};
    Adam opt(0.05);
    for (int i = 0; i < 2000; ++i) {
        const std::vector<double> g{2 * (p[0] - 1), 2 * (p[1] + 4)};
        opt.step(p, g);
    }
    EXPECT_NEAR(p[0], 1.0, 1e-3);
    EXPECT_NEAR(p[1], -4.0, 1e-3);
    EXPECT_EQ(opt.steps(), 2000);
}

TEST(Adam, FirstStepIsLearningRate) {
    std::vector<double> p{0.0};
    const std::vector<double> g{5.0};
    Adam opt(0.01);
    opt.step(p, g);
    EXPECT_NEAR(p[0], -0.01, 1e-9);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
    for (unsigned threads : {1u, 4u}) {
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
}

TEST(ParallelFor, RethrowsWorkerException) {
    EXPECT_THROW(parallel_for(10, 3,
                              [](std::size_t i) {
                                  if (i == 5) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}
