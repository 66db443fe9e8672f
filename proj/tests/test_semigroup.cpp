#include "wou/semigroup.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <omp.h>

using namespace wou;
using namespace wou::mc;

namespace {

DiffusionConfig config(long paths, double dt = 1e-2, std::uint64_t seed = 99)
{
    DiffusionConfig c;
    c.paths = paths;
    c.dt = dt;
    c.seed = seed;
    return c;
}

} // namespace

TEST(Semigroup, MehlerLinear)
{
    const Vec a = (Vec(2) << 0.6, 0.8).finished();
    const Vec xi = (Vec(2) << 1.0, -0.5).finished();
    MehlerSpec spec;
    spec.a = a;
    const MCValue v = semigroup_apply(weights::zero(2), fns::linear(a), 0.5, xi, config(20000, 1e-3));
    EXPECT_NEAR(v.mean, mehler_oracle(spec, 0.5, xi), 4 * v.std_error + 1e-3);
}

TEST(Semigroup, MehlerHermiteTwo)
{
    Vec xi(1);
    xi << 0.7;
    MehlerSpec spec;
    spec.kind = MehlerKind::hermite;
    spec.k = 2;
    const MCValue v = semigroup_apply(weights::zero(1), fns::hermite(2), 0.25, xi, config(20000, 1e-3));
    EXPECT_NEAR(v.mean, mehler_oracle(spec, 0.25, xi), 4 * v.std_error + 2e-3);
    EXPECT_NEAR(mehler_oracle(spec, 0.25, xi), std::exp(-0.5) * hermite(2, 0.7), 1e-14);
}

TEST(Semigroup, IndependentOfThreadCount)
{
    const ConvexWeight w = weights::huber(2, 0.5);
    const SmoothFn f = fns::cos_ridge(Vec::Ones(2));
    const Vec xi = Vec::Constant(2, 0.3);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const MCValue a = resolvent_apply(w, f, 1.0, xi, config(500));
    omp_set_num_threads(3);
    const MCValue b = resolvent_apply(w, f, 1.0, xi, config(500));
    omp_set_num_threads(saved);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std_error, b.std_error);
}

TEST(Semigroup, LeadingCoordinatesShareNoiseAcrossDimensions)
{
    const Mat x1 = simulate_terminal(weights::zero(1), Vec::Zero(1), 0.5, config(200));
    const Mat x3 = simulate_terminal(weights::zero(3), Vec::Zero(3), 0.5, config(200));
    EXPECT_EQ(x1.row(0), x3.row(0));
}

TEST(Semigroup, GradientBound)
{
    const SmoothFn f = fns::tanh_ridge((Vec(2) << 1.5, -1.0).finished());
    const ConvexWeight w = weights::quadratic(2, 0.7);
    for (double t : {0.25, 1.0}) {
        const auto g = semigroup_gradient(w, f, t, Vec::Constant(2, 0.1), config(4000));
        double n2 = 0.0;
        for (const auto& gi : g) n2 += gi.mean * gi.mean;
        EXPECT_LE(std::sqrt(n2), 1.0 / std::sqrt(t));
    }
}

TEST(Resolvent, ConstantIsExactUpToTail)
{
    DiffusionConfig c = config(100);
    c.t_max = 6.0;
    const MCValue v = resolvent_apply(weights::l1(1), fns::constant(2.0), 1.0, Vec::Zero(1), c);
    EXPECT_NEAR(v.mean, 2.0 * (1.0 - std::exp(-6.0)), 1e-12);
    EXPECT_EQ(v.std_error, 0.0);
    EXPECT_NEAR(v.bias_bound, 2.0 * std::exp(-6.0), 1e-12);
}

TEST(Resolvent, HermiteScaling)
{
    Vec xi(1);
    xi << 0.8;
    for (double lambda : {0.5, 2.0}) {
        const MCValue v = resolvent_apply(weights::zero(1), fns::hermite(1), lambda, xi, config(20000, 1e-2));
        EXPECT_NEAR(v.mean, 0.8 / (lambda + 1.0), 4 * v.std_error + v.bias_bound + 5e-3);
    }
}

TEST(Resolvent, DerivativesOfHermiteTwo)
{
    Vec xi(2);
    xi << 0.4, -0.3;
    const double lambda = 1.0;
    const auto d = resolvent_derivatives(weights::zero(2), fns::hermite(2), lambda, xi, config(4000, 1e-2), 5e-2, true);
    EXPECT_NEAR(d.value.mean, hermite(2, 0.4) / 3.0, 4 * d.value.std_error + 1e-2);
    EXPECT_NEAR(d.gradient[0].mean, 2 * 0.4 / 3.0, 4 * d.gradient[0].std_error + 1e-2);
    EXPECT_NEAR(d.gradient[1].mean, 0.0, 1e-12);
    EXPECT_NEAR(d.hess(0, 0).mean, 2.0 / 3.0, 4 * d.hess(0, 0).std_error + 1e-2);
    EXPECT_NEAR(d.hess(0, 1).mean, 0.0, 1e-10);
    EXPECT_EQ(d.hess(0, 1).mean, d.hess(1, 0).mean);
}

TEST(Semigroup, NonFiniteDriftIsReported)
{
    ConvexWeight bad = weights::zero(1);
    bad.subgrad = [](VecIn, VecOut g) { g.setConstant(NAN); };
    EXPECT_THROW(semigroup_apply(bad, fns::coordinate(0), 0.1, Vec::Zero(1), config(100)), NumericalError);
}

TEST(Semigroup, ConfigValidation)
{
    EXPECT_THROW(semigroup_apply(weights::zero(1), fns::coordinate(0), 0.1, Vec::Zero(1), config(10)), DomainError);
    EXPECT_THROW(semigroup_apply(weights::zero(1), fns::coordinate(0), 0.1, Vec::Zero(1), config(100, -1.0)),
                 DomainError);
}
