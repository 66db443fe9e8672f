#include "wou/prox.hpp"
#include "wou/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace wou;

namespace {

Vec random_vec(NormalStream& rng, int n, double scale = 1.0)
{
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = scale * rng.next();
    return v;
}

prox::Options tight()
{
    prox::Options o;
    o.tol = 1e-12;
    return o;
}

double huber_prox_1d(double x, double delta, double alpha)
{
    return std::abs(x) <= delta + alpha ? -alpha * x / (delta + alpha) : (x > 0 ? -alpha : alpha);
}

double huber_env_1d(double x, double delta, double alpha)
{
    return std::abs(x) <= delta + alpha ? x * x / (2.0 * (delta + alpha)) : std::abs(x) - 0.5 * delta - 0.5 * alpha;
}

} // namespace

TEST(Prox, QuadraticClosedForm)
{
    const double c = 2.0, alpha = 0.5;
    const Vec x = (Vec(3) << 3.0, -1.0, 0.25).finished();
    const auto r = prox::prox_point(weights::quadratic(3, c), x, alpha, tight());
    const Vec h = -c * alpha * x / (1.0 + c * alpha);
    EXPECT_LE((r.minimizer - h).norm(), 1e-10 * h.norm());
    EXPECT_NEAR(r.envelope, c * x.squaredNorm() / (2.0 * (1.0 + c * alpha)), 1e-12);
    EXPECT_LE((r.gradient + h / alpha).norm(), 1e-9);
}

TEST(Prox, HuberClosedFormBothRegions)
{
    const double delta = 0.5, alpha = 1.0;
    const Vec x = (Vec(4) << 2.0, -0.3, 1.4, -5.0).finished();
    const auto r = prox::prox_point(weights::huber(4, delta), x, alpha, tight());
    double env = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double h = huber_prox_1d(x[i], delta, alpha);
        EXPECT_NEAR(r.minimizer[i], h, 1e-8 * std::abs(h));
        env += huber_env_1d(x[i], delta, alpha);
    }
    EXPECT_NEAR(r.envelope, env, 1e-8 * env);
}

TEST(Prox, BundleMatchesSoftThreshold)
{
    const Vec x = (Vec(3) << 2.0, -0.3, 0.7).finished();
    const double alpha = 0.5;
    const auto r = prox::prox_point(weights::l1(3), x, alpha);
    for (int i = 0; i < 3; ++i) {
        const double z = std::copysign(std::max(std::abs(x[i]) - alpha, 0.0), x[i]);
        EXPECT_NEAR(r.minimizer[i], z - x[i], 1e-6);
    }
    EXPECT_LE(r.residual, 1e-8);
}

TEST(Prox, NonexpansiveAcrossFamily)
{
    NormalStream rng(11, 0);
    const int n = 3;
    Mat A(4, n);
    for (int i = 0; i < 4; ++i) A.row(i) = random_vec(rng, n).transpose();
    const Vec b = random_vec(rng, 4);
    const std::vector<ConvexWeight> family{weights::zero(n),       weights::quadratic(n, 3.0), weights::huber(n, 0.2),
                                           weights::l1(n),         weights::max_affine(A, b),  weights::log_sum_exp(A, b)};
    int violations = 0;
    for (const auto& w : family) {
        for (int trial = 0; trial < 40; ++trial) {
            const Vec x = random_vec(rng, n, 2.0), y = random_vec(rng, n, 2.0);
            const double alpha = 0.1 + rng.uniform();
            const Vec px = prox::prox_point(w, x, alpha).minimizer;
            const Vec py = prox::prox_point(w, y, alpha).minimizer;
            if ((px - py).norm() > (x - y).norm() + 1e-6) ++violations;
        }
    }
    EXPECT_EQ(violations, 0);
}

TEST(Prox, EnvelopeBelowWeightAndMonotone)
{
    const ConvexWeight w = weights::huber(2, 0.3);
    const Vec x = (Vec(2) << 0.9, -1.7).finished();
    double prev = w.value(x);
    for (double alpha : {0.01, 0.1, 0.5, 1.0, 4.0}) {
        const double e = prox::moreau_envelope(w, x, alpha, tight());
        EXPECT_LE(e, prev + 1e-12);
        prev = e;
    }
}

TEST(Prox, EnvelopeGradientMatchesDifferences)
{
    NormalStream rng(3, 0);
    Mat A(3, 2);
    for (int i = 0; i < 3; ++i) A.row(i) = random_vec(rng, 2).transpose();
    const ConvexWeight w = weights::max_affine(A, random_vec(rng, 3));
    const double alpha = 0.7;
    const Vec x = random_vec(rng, 2);
    const Vec g = prox::envelope_gradient(w, x, alpha, tight());
    const double step = 1e-5;
    for (int i = 0; i < 2; ++i) {
        Vec e = Vec::Zero(2);
        e[i] = step;
        const double fd = (prox::moreau_envelope(w, x + e, alpha, tight()) -
                           prox::moreau_envelope(w, x - e, alpha, tight())) /
                          (2 * step);
        EXPECT_NEAR(g[i], fd, 1e-4 * std::max(1.0, std::abs(fd)));
    }
}

TEST(Prox, OptimalityAndMinorant)
{
    const ConvexWeight w = weights::l1(2);
    const Vec x = (Vec(2) << 1.5, -0.2).finished();
    const auto r = prox::prox_point(w, x, 1.0);
    std::vector<Vec> probes;
    NormalStream rng(5, 0);
    for (int k = 0; k < 50; ++k) probes.push_back(random_vec(rng, 2));
    EXPECT_GE(prox::check_optimality(w, x, 1.0, r.minimizer, probes), -1e-6);

    const auto m = prox::affine_minorant(w, x);
    for (const Vec& p : probes) EXPECT_LE(m(p), w.value(p) + 1e-12);
}

TEST(Prox, MoreauWeightIsSmooth)
{
    const ConvexWeight env = prox::moreau_weight(weights::l1(2), 0.5);
    ASSERT_TRUE(env.grad_lip.has_value());
    EXPECT_DOUBLE_EQ(*env.grad_lip, 2.0);
    const auto audit = audit_weight(env, 200, 17);
    EXPECT_GE(audit.convexity_slack, -1e-7);
    EXPECT_LE(audit.lipschitz_excess, 1e-5);
}

TEST(Prox, RejectsBadAlpha)
{
    EXPECT_THROW(prox::prox_point(weights::l1(1), Vec::Zero(1), 0.0), DomainError);
    EXPECT_THROW(prox::prox_point(weights::l1(2), Vec::Zero(1), 1.0), DomainError);
}
