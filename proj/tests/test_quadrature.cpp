#include "wou/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace wou;

TEST(GaussLegendre, ExactForPolynomials)
{
    for (int n : {2, 3, 5, 8, 12, 20, 32}) {
        const GaussRule r = gauss_legendre(n);
        ASSERT_EQ(r.nodes.size(), n);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
            const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
            EXPECT_NEAR(s, exact, 1e-13) << "n=" << n << " k=" << k;
        }
    }
}

TEST(GaussLegendre, RejectsUnsupportedOrder)
{
    EXPECT_THROW(gauss_legendre(1), DomainError);
    EXPECT_THROW(gauss_legendre(11), DomainError);
}

TEST(CompositeGauss, SmoothIntegrand)
{
    const GaussRule r = composite_gauss(0.0, M_PI, 8, 6);
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::sin(r.nodes[i]);
    EXPECT_NEAR(s, 2.0, 1e-13);
}

TEST(ResolventQuadrature, LaplaceTransformsOfSmoothFunctions)
{
    const double lambda = 0.5, dt = 1e-3, T = 16.0;
    const TimeQuadrature q = resolvent_quadrature(lambda, dt, T, 64);
    ASSERT_EQ(q.steps.front(), 0);
    for (std::size_t k = 1; k < q.steps.size(); ++k) EXPECT_GT(q.steps[k], q.steps[k - 1]);
    double s1 = 0.0, st = 0.0, se = 0.0;
    for (Eigen::Index k = 0; k < q.times.size(); ++k) {
        s1 += q.weights[k];
        st += q.weights[k] * q.times[k];
        se += q.weights[k] * std::exp(-q.times[k]);
    }
    const double eT = std::exp(-lambda * T);
    EXPECT_NEAR(s1, (1.0 - eT) / lambda, 1e-12);
    EXPECT_NEAR(st, (1.0 - eT * (1.0 + lambda * T)) / (lambda * lambda), 1e-10);
    EXPECT_NEAR(se, (1.0 - std::exp(-(1.0 + lambda) * T)) / (1.0 + lambda), 1e-5);
    EXPECT_NEAR(q.tail_factor(), eT / lambda, 1e-15);
}

TEST(ResolventQuadrature, CoarseGrid)
{
    const TimeQuadrature q = resolvent_quadrature(2.0, 0.04, 8.0, 24);
    double se = 0.0;
    for (Eigen::Index k = 0; k < q.times.size(); ++k) se += q.weights[k] * std::exp(-q.times[k]);
    EXPECT_NEAR(se, 1.0 / 3.0, 1e-4);
    EXPECT_EQ(q.total_steps, 200);
}
