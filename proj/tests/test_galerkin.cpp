#include "wou/galerkin.hpp"
#include "wou/grid.hpp"
#include "wou/rng.hpp"
#include "wou/wiener.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace wou;
using namespace wou::galerkin;

namespace {

McOptions mc(long samples, std::uint64_t seed = 5, bool memo = false)
{
    McOptions o;
    o.samples = samples;
    o.seed = seed;
    o.memoize = memo;
    return o;
}

// Exact int |grad U - grad psi_n|^2 dnu for the energy weight on m modes.
double energy_correction(const wiener::EnergyWeight& U, int n)
{
    double s = 0.0;
    for (int i = n; i < U.modes(); ++i) {
        const double l = U.basis().eigenvalue(i);
        s += 4.0 * l * l / (1.0 + 2.0 * l);
    }
    return s;
}

} // namespace

TEST(ConditionalExpectation, EnergyClosedForm)
{
    auto U = std::make_shared<wiener::EnergyWeight>(64);
    const Vec xi = (Vec(2) << 0.7, -1.2).finished();
    const MCValue v = conditional_expectation(U, 2, xi, mc(20000));
    const double exact = U->truncation(2).value(xi);
    EXPECT_NEAR(v.mean, exact, 3 * v.std_error);
    const auto g = psi_gradient(U, 2, xi, mc(2000));
    EXPECT_NEAR(g[0].mean, 2 * U->basis().eigenvalue(0) * 0.7, 1e-12);
    EXPECT_NEAR(g[1].mean, 2 * U->basis().eigenvalue(1) * -1.2, 1e-12);
}

TEST(ConditionalExpectation, LinearAndCylindricalBases)
{
    Vec a = Vec::Zero(6);
    a[0] = 1.0;
    const auto lin = cylindrical(weights::affine(a));
    const Vec xi = Vec::Constant(2, 0.4);
    const MCValue v = conditional_expectation(lin, 2, xi, mc(500));
    EXPECT_NEAR(v.mean, 0.4, 1e-12);

    const auto cyl = cylindrical(weights::embed(weights::huber(1, 0.5), 5));
    const MCValue c = conditional_expectation(cyl, 2, xi, mc(500));
    EXPECT_NEAR(c.mean, weights::huber(1, 0.5).value(xi.head(1)), 1e-12);
    EXPECT_EQ(c.std_error, 0.0);
}

TEST(TruncatedWeight, ConvexAndLipschitz)
{
    auto base = std::make_shared<wiener::MaxEndpointWeight>(32, 128);
    const TruncatedWeight t(base, 2, mc(64, 3, true));
    const ConvexWeight w = t.as_weight();
    const auto audit = audit_weight(w, 300, 21);
    EXPECT_GE(audit.convexity_slack, -1e-10);
    EXPECT_GE(audit.subgradient_slack, -1e-10);
}

TEST(BumpKernel, MomentsAndSupport)
{
    for (int n : {1, 2, 3}) {
        const BumpKernel k = BumpKernel::tensor(n);
        EXPECT_NEAR(k.weights.sum(), 1.0, 1e-12);
        EXPECT_LT(k.nodes.colwise().norm().maxCoeff(), 1.0);
        EXPECT_NEAR(k.second_moment(), 1.0 / (n + 10), 2e-3);
    }
    for (int n : {4, 8}) {
        const BumpKernel k = BumpKernel::cross(n);
        EXPECT_EQ(k.nodes.cols(), 2 * n);
        EXPECT_NEAR(k.second_moment(), 1.0 / (n + 10), 1e-14);
        EXPECT_LE((k.nodes * k.weights).norm(), 1e-14);
    }
}

TEST(Mollify, AffineUnchangedQuadraticShifted)
{
    const double eps = 0.3;
    const BumpKernel k = BumpKernel::tensor(1);
    const MollifiedWeight aff = mollify(weights::affine(Vec::Constant(1, 2.0), 1.0), eps, k);
    Vec x(1);
    x << 0.8;
    EXPECT_NEAR(aff.value(x), 2.6, 1e-13);

    const MollifiedWeight q = mollify(weights::quadratic(1, 2.0), eps, k);
    EXPECT_NEAR(q.value(x), 0.64 + eps * eps * k.second_moment(), 1e-13);
    EXPECT_NEAR(q.gradient(x)[0], 1.6, 1e-13);
}

TEST(Mollify, BiasBoundedByLipschitzTimesEpsilon)
{
    const ConvexWeight l1 = weights::l1(2);
    NormalStream rng(4, 0);
    for (double eps : {0.5, 0.1}) {
        const MollifiedWeight m = mollify(l1, eps, BumpKernel::tensor(2));
        for (int k = 0; k < 50; ++k) {
            const Vec x = (Vec(2) << rng.next(), rng.next()).finished();
            EXPECT_LE(std::abs(m.value(x) - l1.value(x)), std::sqrt(2.0) * eps + 1e-12);
        }
    }
}

TEST(GradientCorrection, EnergyMatchesSeriesAndDecreases)
{
    const auto U = std::make_shared<wiener::EnergyWeight>(128);
    const ConvexWeight full = U->as_weight();
    double prev = INFINITY;
    for (int n : {1, 2, 4, 8}) {
        const MCValue c = gradient_correction_norm(full, U->truncation(n), n, mc(20000, 8));
        EXPECT_NEAR(c.mean, energy_correction(*U, n), 4 * c.std_error);
        EXPECT_LT(c.mean, prev);
        prev = c.mean;
    }
    const MCValue same = gradient_correction_norm(full, full, 128, mc(100));
    EXPECT_EQ(same.mean, 0.0);
}

TEST(PerturbationResidual, ConstantSolution)
{
    const ConvexWeight U = weights::quadratic(3, 1.0);
    std::vector<Vec> pts{Vec::Zero(3), Vec::Ones(3)};
    EXPECT_NEAR(perturbation_residual(fns::constant(2.0), U, weights::quadratic(1, 0.5), 0.5, fns::constant(1.0), pts),
                0.0, 1e-14);
}

TEST(PerturbationResidual, GridSolvedEnergyTruncation)
{
    const auto U = std::make_shared<wiener::EnergyWeight>(64);
    const ConvexWeight psi = U->truncation(1);
    grid::GridSpec spec;
    spec.dim = 1;
    spec.radius = 6.0;
    spec.mesh = 1.0 / 64;
    const SmoothFn f = fns::tanh_ridge(Vec::Ones(1));
    const auto V = grid::to_smooth_fn(grid::solve_elliptic_grid(psi, [&](VecIn x) { return f(x); }, 1.0, spec));
    NormalStream rng(6, 0);
    std::vector<Vec> pts;
    for (int k = 0; k < 200; ++k) {
        Vec x(64);
        for (int i = 0; i < 64; ++i) x[i] = rng.next();
        pts.push_back(x);
    }
    EXPECT_LE(perturbation_residual(V, U->as_weight(), psi, 1.0, f, pts), 5e-2);
}
