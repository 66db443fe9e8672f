#include "wou/grid.hpp"
#include "wou/quadrature.hpp"
#include "wou/semigroup.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace wou;
using namespace wou::grid;

namespace {

GridSpec spec1(double mesh)
{
    GridSpec s;
    s.dim = 1;
    s.radius = 8.0;
    s.mesh = mesh;
    return s;
}

double max_interior_error(const GridSolution& s, const std::function<double(double)>& exact, double r)
{
    double err = 0.0;
    for (Eigen::Index i = 0; i < s.values.size(); ++i) {
        const double x = s.point(i)[0];
        if (std::abs(x) <= r) err = std::max(err, std::abs(s.values[i] - exact(x)));
    }
    return err;
}

// int_0^inf e^{-lambda t} T_t cos(<a, .>)(xi) dt for phi = 0.
double cos_resolvent(const Vec& a, double lambda, VecIn xi)
{
    mc::MehlerSpec spec;
    spec.kind = mc::MehlerKind::cosine;
    spec.a = a;
    const GaussRule r = composite_gauss(0.0, 60.0, 240, 8);
    double s = 0.0;
    for (Eigen::Index k = 0; k < r.nodes.size(); ++k)
        s += r.weights[k] * std::exp(-lambda * r.nodes[k]) * mc::mehler_oracle(spec, r.nodes[k], xi);
    return s;
}

} // namespace

TEST(GridSpec, Validation)
{
    GridSpec s;
    s.mesh = 0.35;
    EXPECT_THROW(s.validate(), DomainError);
    s.mesh = 0.25;
    s.dim = 3;
    EXPECT_THROW(s.validate(), DomainError);
}

TEST(Grid, HermiteEigenfunctionResolvents)
{
    const ConvexWeight w = weights::zero(1);
    for (int k : {1, 2, 3}) {
        for (double lambda : {0.5, 1.0, 2.0}) {
            const SmoothFn f = fns::hermite(k);
            const GridSolution s = solve_elliptic_grid(w, [&](VecIn x) { return f(x); }, lambda, spec1(1.0 / 128));
            const double err = max_interior_error(s, [&](double x) { return hermite(k, x) / (lambda + k); }, 2.0);
            const double scale = std::abs(hermite(k, 2.0)) / (lambda + k);
            EXPECT_LE(err, 1e-4 * scale) << "k=" << k << " lambda=" << lambda;
        }
    }
}

TEST(Grid, SecondOrderConvergence)
{
    const ConvexWeight w = weights::zero(1);
    const SmoothFn f = fns::hermite(3);
    auto exact = [](double x) { return hermite(3, x) / 4.0; };
    double prev = 0.0;
    for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
        const GridSolution s = solve_elliptic_grid(w, [&](VecIn x) { return f(x); }, 1.0, spec1(h));
        const double err = max_interior_error(s, exact, 2.0);
        if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.5);
        prev = err;
    }
}

TEST(Grid, ConstantsAndMaximumPrinciple)
{
    const ConvexWeight w = weights::huber(1, 0.3);
    const GridSolution c = solve_elliptic_grid(w, [](VecIn) { return 3.0; }, 2.0, spec1(1.0 / 16));
    EXPECT_LE((c.values.array() - 1.5).abs().maxCoeff(), 1e-10);

    const SmoothFn f = fns::tanh_ridge(Vec::Ones(1));
    const GridSolution s = solve_elliptic_grid(w, [&](VecIn x) { return f(x); }, 0.5, spec1(1.0 / 16));
    EXPECT_LE(s.values.cwiseAbs().maxCoeff(), 1.0 / 0.5 + 1e-12);
}

TEST(Grid, TwoDimensionalCosineAgainstMehler)
{
    const Vec a = (Vec(2) << 0.8, -0.5).finished();
    const SmoothFn f = fns::cos_ridge(a);
    GridSpec spec;
    spec.dim = 2;
    spec.radius = 6.0;
    spec.mesh = 0.125;
    const GridSolution s = solve_elliptic_grid(weights::zero(2), [&](VecIn x) { return f(x); }, 1.0, spec);
    const double pts[][2] = {{0.0, 0.0}, {0.5, -1.0}, {1.25, 0.75}};
    for (const auto& p : pts) {
        const Vec xi = (Vec(2) << p[0], p[1]).finished();
        EXPECT_NEAR(s.interpolate(xi), cos_resolvent(a, 1.0, xi), 2e-3);
    }
}

TEST(Grid, ParabolicHermiteDecay)
{
    const SmoothFn f = fns::hermite(1);
    const auto slices = solve_parabolic_grid(weights::zero(1), [&](VecIn x) { return f(x); }, 1.0, 400, spec1(1.0 / 32));
    ASSERT_EQ(slices.size(), 401u);
    const GridSolution& last = slices.back();
    Vec x(1);
    x << 1.0;
    EXPECT_NEAR(last.interpolate(x), std::exp(-1.0), 5e-3);
}

TEST(Grid, BernsteinFunctionalBounded)
{
    const SmoothFn f = fns::tanh_ridge(Vec::Ones(1) * 2.0);
    const auto slices =
        solve_parabolic_grid(weights::quadratic(1, 0.5), [&](VecIn x) { return f(x); }, 1.0, 200, spec1(1.0 / 32));
    EXPECT_LE(bernstein_monitor(slices, 5.0), 1.0 + 1e-6);
}

TEST(Grid, GeneratorOnHermite)
{
    const ConvexWeight w = weights::zero(1);
    const SmoothFn u = fns::hermite(3);
    Vec x(1);
    for (double t : {-1.3, 0.2, 2.5}) {
        x << t;
        EXPECT_NEAR(apply_generator(w, u, x), -3.0 * hermite(3, t), 1e-12);
    }
}

TEST(Grid, LyapunovMarginBelowBound)
{
    for (const ConvexWeight& w : {weights::quadratic(1, 2.0), weights::huber(2, 0.5), weights::l1(2)}) {
        EXPECT_LE(lyapunov_margin(w, 5.0, 2000), lyapunov_bound(w) + 1e-12);
    }
}

TEST(Grid, CsvHeader)
{
    const GridSolution s = solve_elliptic_grid(weights::zero(1), [](VecIn) { return 1.0; }, 1.0, spec1(0.5));
    std::ostringstream os;
    s.write_csv(os);
    EXPECT_EQ(os.str().substr(0, 15), "x0,value,grad0\n");
}
