#include "wou/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>

namespace wou {

namespace {

template <unsigned N>
GaussRule expand_boost_rule()
{
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    GaussRule r;
    r.nodes.resize(N);
    r.weights.resize(N);
    // Boost stores the nonnegative half, starting from the center.
    int k = 0;
    const int half = static_cast<int>(x.size());
    for (int i = half - 1; i >= 0; --i) {
        if (x[i] == 0.0) continue;
        r.nodes[k] = -x[i];
        r.weights[k] = w[i];
        ++k;
    }
    for (int i = 0; i < half; ++i) {
        r.nodes[k] = x[i];
        r.weights[k] = w[i];
        ++k;
    }
    return r;
}

} // namespace

GaussRule gauss_legendre(int n)
{
    switch (n) {
    case 2: return expand_boost_rule<2>();
    case 3: return expand_boost_rule<3>();
    case 4: return expand_boost_rule<4>();
    case 5: return expand_boost_rule<5>();
    case 6: return expand_boost_rule<6>();
    case 7: return expand_boost_rule<7>();
    case 8: return expand_boost_rule<8>();
    case 9: return expand_boost_rule<9>();
    case 10: return expand_boost_rule<10>();
    case 12: return expand_boost_rule<12>();
    case 16: return expand_boost_rule<16>();
    case 20: return expand_boost_rule<20>();
    case 24: return expand_boost_rule<24>();
    case 32: return expand_boost_rule<32>();
    default: throw DomainError("gauss_legendre: unsupported order " + std::to_string(n));
    }
}

GaussRule composite_gauss(double a, double b, int panels, int order)
{
    require(b > a && panels >= 1, "composite_gauss: bad interval");
    const GaussRule base = gauss_legendre(order);
    GaussRule r;
    r.nodes.resize(static_cast<Eigen::Index>(panels) * order);
    r.weights.resize(r.nodes.size());
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        for (int k = 0; k < order; ++k) {
            r.nodes[p * order + k] = lo + 0.5 * width * (base.nodes[k] + 1.0);
            r.weights[p * order + k] = 0.5 * width * base.weights[k];
        }
    }
    return r;
}

double TimeQuadrature::tail_factor() const
{
    return std::exp(-lambda * t_max) / lambda;
}

TimeQuadrature resolvent_quadrature(double lambda, double dt, double t_max, int nodes)
{
    require(lambda > 0.0, "resolvent quadrature: lambda must be positive");
    require(dt > 0.0 && t_max >= dt, "resolvent quadrature: need 0 < dt <= t_max");
    require(nodes >= 2, "resolvent quadrature: need at least two nodes");
    TimeQuadrature q;
    q.lambda = lambda;
    q.total_steps = static_cast<long>(std::ceil(t_max / dt - 1e-9));
    q.t_max = static_cast<double>(q.total_steps) * dt;

    std::vector<long> steps{0};
    const double ratio = q.t_max / dt;
    for (int k = 0; k < nodes; ++k) {
        const double t = dt * std::pow(ratio, static_cast<double>(k) / (nodes - 1));
        const long s = std::clamp(std::lround(t / dt), 1L, q.total_steps);
        if (s > steps.back()) steps.push_back(s);
    }
    if (steps.back() != q.total_steps) steps.push_back(q.total_steps);
    q.steps = steps;
    const auto m = static_cast<Eigen::Index>(steps.size());
    q.times.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) q.times[i] = static_cast<double>(steps[i]) * dt;
    q.weights = Vec::Zero(m);

    const GaussRule gl = gauss_legendre(20);
    auto integrate = [&](double a, double b, auto&& fn) {
        double s = 0.0;
        for (Eigen::Index k = 0; k < gl.nodes.size(); ++k) {
            const double t = a + 0.5 * (b - a) * (gl.nodes[k] + 1.0);
            s += gl.weights[k] * std::exp(-lambda * t) * fn(t);
        }
        return 0.5 * (b - a) * s;
    };

    Eigen::Index i = 0;
    while (i + 2 < m) {
        const double a = q.times[i], b = q.times[i + 1], c = q.times[i + 2];
        q.weights[i] += integrate(a, c, [&](double t) { return (t - b) * (t - c) / ((a - b) * (a - c)); });
        q.weights[i + 1] += integrate(a, c, [&](double t) { return (t - a) * (t - c) / ((b - a) * (b - c)); });
        q.weights[i + 2] += integrate(a, c, [&](double t) { return (t - a) * (t - b) / ((c - a) * (c - b)); });
        i += 2;
    }
    if (i + 1 < m) {
        const double a = q.times[i], b = q.times[i + 1];
        q.weights[i] += integrate(a, b, [&](double t) { return (b - t) / (b - a); });
        q.weights[i + 1] += integrate(a, b, [&](double t) { return (t - a) / (b - a); });
    }
    return q;
}

} // namespace wou
