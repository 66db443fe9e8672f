#include "wou/common.hpp"
#include "wou/rng.hpp"

#include <gtest/gtest.h>

#include <vector>

using namespace wou;

TEST(Philox, KnownAnswerVectors)
{
    using C = Philox4x32::Counter;
    EXPECT_EQ(Philox4x32::apply(C{0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::apply(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::apply(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(NormalStream, PureFunctionOfSeedAndStream)
{
    NormalStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    bool differs_c = false, differs_d = false;
    for (int i = 0; i < 100; ++i) {
        const double x = a.next();
        EXPECT_EQ(x, b.next());
        differs_c = differs_c || x != c.next();
        differs_d = differs_d || x != d.next();
    }
    EXPECT_TRUE(differs_c);
    EXPECT_TRUE(differs_d);
}

TEST(NormalStream, Moments)
{
    NormalStream s(1, 0);
    const int N = 200000;
    std::vector<double> x(N), x2(N), x4(N);
    for (int i = 0; i < N; ++i) {
        x[i] = s.next();
        x2[i] = x[i] * x[i];
        x4[i] = x2[i] * x2[i];
    }
    const MCValue m1 = summarize(x), m2 = summarize(x2), m4 = summarize(x4);
    EXPECT_LT(std::abs(m1.mean), 4 * m1.std_error);
    EXPECT_LT(std::abs(m2.mean - 1.0), 4 * m2.std_error);
    EXPECT_LT(std::abs(m4.mean - 3.0), 4 * m4.std_error);
}

TEST(NormalStream, UniformRange)
{
    NormalStream s(9, 3);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    EXPECT_GE(lo, 0.0);
    EXPECT_LT(hi, 1.0);
    EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(DeriveSeed, DistinctLabels)
{
    EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
    EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
    EXPECT_EQ(derive_seed(5, "row/1"), derive_seed(5, "row/1"));
    EXPECT_NE(derive_seed(5, std::uint64_t{0}), derive_seed(5, std::uint64_t{1}));
}

TEST(Summaries, ConstantSamplesHaveZeroError)
{
    const std::vector<double> v(1000, 0.1);
    const MCValue m = summarize(v);
    EXPECT_DOUBLE_EQ(m.mean, 0.1);
    EXPECT_EQ(m.std_error, 0.0);
    const std::vector<double> w(1000, 2.0);
    const MCValue wm = weighted_mean(w, v);
    EXPECT_DOUBLE_EQ(wm.mean, 0.1);
    EXPECT_EQ(wm.std_error, 0.0);
}
