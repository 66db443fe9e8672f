#include "wou/quadrature.hpp"
#include "wou/rng.hpp"
#include "wou/wiener.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace wou;
using namespace wou::wiener;

namespace {

constexpr double pi = std::numbers::pi;

// H-frame coordinates of f(s) = s.
Vec ramp(int modes)
{
    Vec xi(modes);
    for (int i = 0; i < modes; ++i) xi[i] = std::sqrt(2.0) * (i % 2 ? -1.0 : 1.0) / ((2 * i + 1) * pi / 2);
    return xi;
}

} // namespace

TEST(WienerBasis, Orthonormal)
{
    const WienerBasis b(12);
    const GaussRule q = composite_gauss(0.0, 1.0, 64, 16);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) {
            double s = 0.0;
            for (Eigen::Index k = 0; k < q.nodes.size(); ++k) s += q.weights[k] * b.e(i, q.nodes[k]) * b.e(j, q.nodes[k]);
            EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-8) << i << ' ' << j;
        }
    for (int i = 0; i < 12; ++i) {
        Vec c = Vec::Zero(12);
        c[i] = std::sqrt(b.eigenvalue(i));
        EXPECT_NEAR(cm_norm_sq(b, c), 1.0, 1e-14);
    }
    EXPECT_NEAR(b.eigenvalue(0), 4.0 / (pi * pi), 1e-15);
    EXPECT_NEAR(b.eigenvalue(2), 4.0 / (25 * pi * pi), 1e-15);
}

TEST(WienerBasis, FrameRoundTrip)
{
    const WienerBasis b(8);
    const Vec c = Vec::LinSpaced(8, -1.0, 2.0);
    EXPECT_LT((b.l2_from_frame(b.frame_from_l2(c)) - c).norm(), 1e-14);
}

TEST(KLPath, SingleModeFormula)
{
    const WienerBasis b(1);
    const Vec c = Vec::Constant(1, 0.7);
    const KLPathSample p = path_from_coeffs(b, c, uniform_grid(11));
    for (Eigen::Index k = 0; k < p.grid.size(); ++k)
        EXPECT_NEAR(p.values[k], 0.7 * 2 * std::sqrt(2.0) / pi * std::sin(pi * p.grid[k] / 2), 1e-14);
    EXPECT_EQ(p.values[0], 0.0);
}

TEST(KLPath, CovarianceIsMinimum)
{
    const WienerBasis b(256);
    // Truncated kernel against min(s, t).
    for (double s : {0.1, 0.5, 0.9})
        for (double t : {0.3, 1.0})
            EXPECT_NEAR(b.h_at(s).dot(b.h_at(t)), std::min(s, t), 2e-3);

    const int N = 4000;
    const Vec grid = uniform_grid(5);
    Mat prods(N, 3);
    for (int k = 0; k < N; ++k) {
        const KLPathSample p = sample_path(b, 17, 5, k);
        EXPECT_EQ(p.values[0], 0.0);
        prods(k, 0) = p.values[2] * p.values[2];
        prods(k, 1) = p.values[1] * p.values[3];
        prods(k, 2) = p.values[4] * p.values[4];
    }
    const double expected[] = {0.5, 0.25, 1.0};
    for (int j = 0; j < 3; ++j) {
        const Vec col = prods.col(j);
        const MCValue v = summarize(std::span<const double>(col.data(), col.size()));
        EXPECT_NEAR(v.mean, expected[j], 4 * v.std_error + 2e-3);
    }
}

TEST(EnergyWeight, FirstEigenfunction)
{
    const WienerBasis b(16);
    Vec c = Vec::Zero(16);
    c[0] = 1.0;
    const WeightEval e = energy_weight(b, b.frame_from_l2(c));
    EXPECT_NEAR(e.value, 1.0, 1e-14);
    EXPECT_NEAR(e.gradient.norm(), 4.0 / pi, 1e-14);
}

TEST(EnergyWeight, GradientLipschitz)
{
    const auto U = std::make_shared<EnergyWeight>(64);
    ASSERT_TRUE(U->grad_lip().has_value());
    EXPECT_NEAR(*U->grad_lip(), 8.0 / (pi * pi), 1e-14);
    EXPECT_LE(*U->grad_lip(), 4.0 / pi * 1.01);
    const WeightAudit a = audit_weight(U->as_weight(), 200, 3);
    EXPECT_LE(a.lipschitz_excess, 1e-12);
    EXPECT_GE(a.convexity_slack, -1e-12);
}

TEST(EnergyWeight, TruncationConstant)
{
    const EnergyWeight U(256);
    const ConvexWeight t = U.truncation(2);
    EXPECT_NEAR(t.value(Vec::Zero(2)), 0.5 - U.basis().eigenvalue(0) - U.basis().eigenvalue(1), 1e-15);
    EXPECT_NEAR(U.tail_remainder(), 0.5 - U.basis().eigenvalues().sum(), 1e-15);
    EXPECT_GT(U.tail_remainder(), 0.0);
}

TEST(MaxEndpoint, Ramp)
{
    const WienerBasis b(1024);
    const Vec grid = uniform_grid(1001);
    const MaxEndpointEval up = max_endpoint_weight(b, path_from_coeffs(b, ramp(1024), grid));
    EXPECT_GE(up.argmax, 0.99);
    EXPECT_NEAR(up.value, 2.0, 2e-3);
    const MaxEndpointEval down = max_endpoint_weight(b, path_from_coeffs(b, -ramp(1024), grid));
    EXPECT_EQ(down.argmax, 0.0);
    EXPECT_NEAR(down.value, -1.0, 2e-3);
    EXPECT_LT((down.gradient - b.h_at(1.0)).norm(), 1e-14);
}

TEST(MaxEndpoint, GateauxDerivative)
{
    const MaxEndpointWeight U(64, 512);
    NormalStream rng(9, 0);
    for (int trial = 0; trial < 5; ++trial) {
        Vec x(64), v(64);
        for (int i = 0; i < 64; ++i) x[i] = rng.next();
        for (int i = 0; i < 64; ++i) v[i] = rng.next();
        Vec g(64), gt(64);
        const double u0 = U.value_and_gradient(x, g);
        for (double t : {1e-1, 1e-2}) EXPECT_GE(U.value_and_gradient(x + t * v, gt) - u0, t * g.dot(v) - 1e-12);
        const double t = 1e-7;
        EXPECT_NEAR((U.value_and_gradient(x + t * v, gt) - u0) / t, g.dot(v), 1e-5);
    }
}

TEST(Divergence, ConstantField)
{
    const CylindricalField e1 = field_from({fns::constant(1.0)});
    const Vec xi = (Vec(2) << 0.4, -2.0).finished();
    EXPECT_NEAR(weighted_divergence(e1, weights::zero(2), xi), -0.4, 1e-15);
    EXPECT_NEAR(weighted_divergence(e1, weights::quadratic(2, 3.0), xi), -1.6, 1e-15);
}

TEST(Divergence, GradientFieldIsGenerator)
{
    const ConvexWeight w = weights::huber(3, 0.5);
    const SmoothFn u = fns::tanh_ridge((Vec(3) << 1.0, -0.5, 0.25).finished());
    NormalStream rng(2, 0);
    for (int k = 0; k < 20; ++k) {
        Vec xi(3);
        for (auto& v : xi) v = rng.next();
        const Jet j = u.jet(xi);
        const double Lu = j.hess.trace() - (w.gradient(xi) + xi).dot(j.grad);
        EXPECT_NEAR(weighted_divergence(gradient_field(u, 3), w, xi), Lu, 1e-12);
    }
}

TEST(Divergence, IntegrationByParts)
{
    const EnergyWeight U(8);
    const ConvexWeight w = U.truncation(3);
    const CylindricalField phi = gradient_field(fns::hermite(2, 1), 2);
    for (const SmoothFn& f : {fns::tanh_ridge(Vec::Ones(3)), fns::cos_ridge((Vec(3) << 1.0, 0.5, 0.0).finished())}) {
        const MCValue r = ibp_residual(f, phi, w, 40000, 12);
        EXPECT_LE(std::abs(r.mean), 3 * r.std_error) << f.name();
        EXPECT_GT(r.std_error, 0.0);
    }
    const MCValue h = ibp_residual(fns::logistic_ridge(Vec::Ones(2)), field_from({fns::constant(1.0)}),
                                   weights::huber(2, 0.5), 40000, 13);
    EXPECT_LE(std::abs(h.mean), 3 * h.std_error);
}
