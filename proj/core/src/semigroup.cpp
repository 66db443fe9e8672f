#include "wou/semigroup.hpp"

#include "wou/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <vector>

namespace wou::mc {

void DiffusionConfig::validate() const
{
    require(dt > 0.0, "DiffusionConfig: dt must be positive");
    require(paths >= 100, "DiffusionConfig: need at least 100 paths");
    require(t_max >= 0.0, "DiffusionConfig: t_max must be nonnegative");
    require(t_max == 0.0 || dt <= t_max, "DiffusionConfig: dt must not exceed t_max");
    require(quad_nodes >= 2, "DiffusionConfig: need at least two quadrature nodes");
}

double DiffusionConfig::horizon(double lambda) const
{
    return t_max > 0.0 ? t_max : std::max(8.0 / lambda, 8.0);
}

namespace {

long step_count(double t, double dt)
{
    return static_cast<long>(std::ceil(t / dt - 1e-9));
}

// Runs cfg.paths paths. Each path moves all columns of `starts` with the same
// Brownian increments and calls visit(path, node, states) at the requested
// steps (strictly increasing). Coordinate i of path p draws from stream
// p * kCoordStride + i, so the noise driving a coordinate does not depend on
// the dimension.
constexpr std::uint64_t kCoordStride = 1ULL << 16;

template <class Visit>
void run_paths(const ConvexWeight& w, const Mat& starts, std::span<const long> record_steps, const DiffusionConfig& cfg,
               Visit&& visit)
{
    const int n = w.dim;
    require(starts.rows() == n, "simulation: start point dimension does not match the weight");
    require(static_cast<std::uint64_t>(n) < kCoordStride, "simulation: dimension too large");
    const long total = record_steps.empty() ? 0 : record_steps.back();
    const double dt = cfg.dt;
    const double sq = std::sqrt(2.0 * dt);
    std::atomic<bool> bad{false};

#pragma omp parallel
    {
        Mat X(n, starts.cols());
        Vec z(n), g(n);
        std::vector<NormalStream> rng;
        rng.reserve(n);
#pragma omp for schedule(static)
        for (long p = 0; p < cfg.paths; ++p) {
            if (bad.load(std::memory_order_relaxed)) continue;
            rng.clear();
            for (int i = 0; i < n; ++i)
                rng.emplace_back(cfg.seed, static_cast<std::uint64_t>(p) * kCoordStride + static_cast<std::uint64_t>(i));
            X = starts;
            std::size_t node = 0;
            if (record_steps[0] == 0) visit(p, node++, X);
            for (long s = 1; s <= total; ++s) {
                for (int i = 0; i < n; ++i) z[i] = rng[i].next();
                for (Eigen::Index c = 0; c < X.cols(); ++c) {
                    w.subgrad(X.col(c), g);
                    if (!g.allFinite()) {
                        bad.store(true);
                        break;
                    }
                    X.col(c) += -(g + X.col(c)) * dt + sq * z;
                }
                if (bad.load(std::memory_order_relaxed)) break;
                if (node < record_steps.size() && record_steps[node] == s) visit(p, node++, X);
            }
        }
    }
    if (bad.load()) throw NumericalError("simulation: non-finite drift evaluation");
}

} // namespace

Mat simulate_terminal(const ConvexWeight& w, VecIn xi0, double t, const DiffusionConfig& cfg)
{
    cfg.validate();
    require(t >= 0.0, "simulate_terminal: t must be nonnegative");
    require(xi0.size() == w.dim, "simulate_terminal: start point dimension does not match the weight");
    Mat out(w.dim, cfg.paths);
    const long steps[] = {step_count(t, cfg.dt)};
    run_paths(w, Mat(xi0), steps, cfg, [&](long p, std::size_t, const Mat& X) { out.col(p) = X.col(0); });
    return out;
}

MCValue semigroup_apply(const ConvexWeight& w, const SmoothFn& f, double t, VecIn xi, const DiffusionConfig& cfg)
{
    cfg.validate();
    require(t >= 0.0, "semigroup_apply: t must be nonnegative");
    require(xi.size() == w.dim, "semigroup_apply: point dimension does not match the weight");
    std::vector<double> vals(static_cast<std::size_t>(cfg.paths));
    const long steps[] = {step_count(t, cfg.dt)};
    run_paths(w, Mat(xi), steps, cfg, [&](long p, std::size_t, const Mat& X) { vals[p] = f(X.col(0)); });
    for (double v : vals) require_finite(v, "semigroup_apply integrand");
    return summarize(vals);
}

std::vector<MCValue> semigroup_gradient(const ConvexWeight& w, const SmoothFn& f, double t, VecIn xi,
                                        const DiffusionConfig& cfg, double fd_step)
{
    cfg.validate();
    require(t >= 0.0, "semigroup_gradient: t must be nonnegative");
    require(fd_step > 0.0, "semigroup_gradient: fd_step must be positive");
    const int n = w.dim;
    require(xi.size() == n, "semigroup_gradient: point dimension does not match the weight");
    // Columns: xi + h e_i, xi - h e_i, xi + 2h e_i, xi - 2h e_i for each i.
    Mat starts(n, 4 * n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 4; ++k) starts.col(4 * i + k) = xi;
        starts(i, 4 * i) += fd_step;
        starts(i, 4 * i + 1) -= fd_step;
        starts(i, 4 * i + 2) += 2.0 * fd_step;
        starts(i, 4 * i + 3) -= 2.0 * fd_step;
    }
    const auto P = static_cast<std::size_t>(cfg.paths);
    std::vector<double> d1(P * n), d2(P * n);
    const long steps[] = {step_count(t, cfg.dt)};
    run_paths(w, starts, steps, cfg, [&](long p, std::size_t, const Mat& X) {
        for (int i = 0; i < n; ++i) {
            d1[i * P + p] = (f(X.col(4 * i)) - f(X.col(4 * i + 1))) / (2.0 * fd_step);
            d2[i * P + p] = (f(X.col(4 * i + 2)) - f(X.col(4 * i + 3))) / (4.0 * fd_step);
        }
    });
    std::vector<MCValue> out(n);
    for (int i = 0; i < n; ++i) {
        out[i] = summarize(std::span(d1).subspan(i * P, P));
        const MCValue coarse = summarize(std::span(d2).subspan(i * P, P));
        out[i].bias_bound = std::abs(out[i].mean - coarse.mean) / 3.0;
        require_finite(out[i].mean, "semigroup_gradient");
    }
    return out;
}

namespace {

double tail_bound(const SmoothFn& f, const TimeQuadrature& q, double last_abs_mean)
{
    const double sup = f.sup_norm() ? *f.sup_norm() : last_abs_mean;
    return sup * q.tail_factor();
}

} // namespace

MCValue resolvent_apply(const ConvexWeight& w, const SmoothFn& f, double lambda, VecIn xi, const DiffusionConfig& cfg)
{
    cfg.validate();
    require(lambda > 0.0, "resolvent_apply: lambda must be positive");
    require(xi.size() == w.dim, "resolvent_apply: point dimension does not match the weight");
    const TimeQuadrature q = resolvent_quadrature(lambda, cfg.dt, cfg.horizon(lambda), cfg.quad_nodes);
    const auto P = static_cast<std::size_t>(cfg.paths);
    std::vector<double> acc(P, 0.0), last(P, 0.0);
    const std::size_t last_node = q.steps.size() - 1;
    run_paths(w, Mat(xi), q.steps, cfg, [&](long p, std::size_t k, const Mat& X) {
        const double v = f(X.col(0));
        acc[p] += q.weights[static_cast<Eigen::Index>(k)] * v;
        if (k == last_node) last[p] = std::abs(v);
    });
    MCValue out = summarize(acc);
    require_finite(out.mean, "resolvent_apply");
    out.bias_bound = tail_bound(f, q, summarize(last).mean);
    return out;
}

Vec ResolventDerivatives::gradient_mean() const
{
    Vec g(dim);
    for (int i = 0; i < dim; ++i) g[i] = gradient[i].mean;
    return g;
}

Mat ResolventDerivatives::hessian_mean() const
{
    Mat H(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) H(i, j) = hess(i, j).mean;
    return H;
}

std::vector<ResolventDerivatives> resolvent_derivatives(const ConvexWeight& w, std::span<const SmoothFn> fs,
                                                        double lambda, VecIn xi, const DiffusionConfig& cfg,
                                                        double fd_step, bool richardson)
{
    cfg.validate();
    require(lambda > 0.0, "resolvent_derivatives: lambda must be positive");
    require(fd_step > 0.0, "resolvent_derivatives: fd_step must be positive");
    require(!fs.empty(), "resolvent_derivatives: no data functions");
    const int n = w.dim;
    require(xi.size() == n, "resolvent_derivatives: point dimension does not match the weight");
    const int F = static_cast<int>(fs.size());
    const int levels = richardson ? 2 : 1;
    const int pairs = n * (n - 1) / 2;
    // Stencil per level: +e_i, -e_i for each i, then +(e_i+e_j), -(e_i+e_j) for i<j.
    const int per_level = 2 * n + 2 * pairs;
    const int S = 1 + levels * per_level;
    Mat starts(n, S);
    starts.colwise() = Vec(xi);
    for (int lv = 0; lv < levels; ++lv) {
        const double h = fd_step * (lv + 1);
        const int base = 1 + lv * per_level;
        for (int i = 0; i < n; ++i) {
            starts(i, base + 2 * i) += h;
            starts(i, base + 2 * i + 1) -= h;
        }
        int c = base + 2 * n;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                starts(i, c) += h;
                starts(j, c) += h;
                starts(i, c + 1) -= h;
                starts(j, c + 1) -= h;
                c += 2;
            }
        }
    }

    const TimeQuadrature q = resolvent_quadrature(lambda, cfg.dt, cfg.horizon(lambda), cfg.quad_nodes);
    const auto P = static_cast<std::size_t>(cfg.paths);
    // Per path: accumulated quadrature sum for every (start, function).
    std::vector<double> acc(P * S * F, 0.0), last(P * F, 0.0);
    const std::size_t last_node = q.steps.size() - 1;
    run_paths(w, starts, q.steps, cfg, [&](long p, std::size_t k, const Mat& X) {
        const double wk = q.weights[static_cast<Eigen::Index>(k)];
        double* row = acc.data() + static_cast<std::size_t>(p) * S * F;
        for (int c = 0; c < S; ++c) {
            for (int m = 0; m < F; ++m) {
                const double v = fs[m](X.col(c));
                row[c * F + m] += wk * v;
                if (k == last_node && c == 0) last[p * F + m] = std::abs(v);
            }
        }
    });

    auto A = [&](std::size_t p, int c, int m) { return acc[(p * S + c) * F + m]; };
    auto pair_col = [n](int i, int j) {
        int c = 2 * n;
        for (int a = 0; a < i; ++a) c += 2 * (n - a - 1);
        return c + 2 * (j - i - 1);
    };
    auto grad_sample = [&](std::size_t p, int m, int lv, int i) {
        const double h = fd_step * (lv + 1);
        const int b = 1 + lv * per_level;
        return (A(p, b + 2 * i, m) - A(p, b + 2 * i + 1, m)) / (2.0 * h);
    };
    auto hess_sample = [&](std::size_t p, int m, int lv, int i, int j) {
        const double h = fd_step * (lv + 1);
        const int b = 1 + lv * per_level;
        const double c0 = A(p, 0, m);
        if (i == j) return (A(p, b + 2 * i, m) - 2.0 * c0 + A(p, b + 2 * i + 1, m)) / (h * h);
        const int pc = b + pair_col(i, j);
        return (A(p, pc, m) + A(p, pc + 1, m) - A(p, b + 2 * i, m) - A(p, b + 2 * i + 1, m) - A(p, b + 2 * j, m) -
                A(p, b + 2 * j + 1, m) + 2.0 * c0) /
               (2.0 * h * h);
    };

    std::vector<double> fine(P), coarse(P);
    // Summarizes a difference quotient; with Richardson the per-path
    // combination (4 D(h) - D(2h))/3 keeps common random numbers in the error bar.
    auto estimate = [&](auto&& sample) {
        for (std::size_t p = 0; p < P; ++p) fine[p] = sample(p, 0);
        if (!richardson) {
            MCValue v = summarize(fine);
            require_finite(v.mean, "resolvent_derivatives");
            return v;
        }
        for (std::size_t p = 0; p < P; ++p) coarse[p] = sample(p, 1);
        const double gap = std::abs(summarize(fine).mean - summarize(coarse).mean) / 3.0;
        for (std::size_t p = 0; p < P; ++p) fine[p] = (4.0 * fine[p] - coarse[p]) / 3.0;
        MCValue v = summarize(fine);
        require_finite(v.mean, "resolvent_derivatives");
        v.bias_bound = gap;
        return v;
    };

    std::vector<ResolventDerivatives> out(F);
    for (int m = 0; m < F; ++m) {
        ResolventDerivatives& r = out[m];
        r.dim = n;
        for (std::size_t p = 0; p < P; ++p) fine[p] = A(p, 0, m);
        r.value = summarize(fine);
        require_finite(r.value.mean, "resolvent_derivatives");
        for (std::size_t p = 0; p < P; ++p) coarse[p] = last[p * F + m];
        r.value.bias_bound = tail_bound(fs[m], q, summarize(coarse).mean);

        r.gradient.resize(n);
        for (int i = 0; i < n; ++i)
            r.gradient[i] = estimate([&](std::size_t p, int lv) { return grad_sample(p, m, lv, i); });
        r.hessian.assign(static_cast<std::size_t>(n) * n, MCValue{});
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                const MCValue v = estimate([&](std::size_t p, int lv) { return hess_sample(p, m, lv, i, j); });
                r.hessian[static_cast<std::size_t>(i) * n + j] = v;
                r.hessian[static_cast<std::size_t>(j) * n + i] = v;
            }
        }
    }
    return out;
}

ResolventDerivatives resolvent_derivatives(const ConvexWeight& w, const SmoothFn& f, double lambda, VecIn xi,
                                           const DiffusionConfig& cfg, double fd_step, bool richardson)
{
    const SmoothFn fs[] = {f};
    return resolvent_derivatives(w, fs, lambda, xi, cfg, fd_step, richardson).front();
}

double mehler_oracle(const MehlerSpec& spec, double t, VecIn xi)
{
    require(t >= 0.0, "mehler_oracle: t must be nonnegative");
    const double e = std::exp(-t);
    switch (spec.kind) {
    case MehlerKind::linear:
        require(spec.a.size() <= xi.size(), "mehler_oracle: direction longer than the point");
        return e * spec.a.dot(xi.head(spec.a.size()));
    case MehlerKind::cosine: {
        require(spec.a.size() <= xi.size(), "mehler_oracle: direction longer than the point");
        const double var = 1.0 - std::exp(-2.0 * t);
        return std::exp(-0.5 * var * spec.a.squaredNorm()) * std::cos(e * spec.a.dot(xi.head(spec.a.size())));
    }
    case MehlerKind::hermite:
        require(spec.k >= 0 && xi.size() >= 1, "mehler_oracle: bad Hermite spec");
        return spec.k == 0 ? 1.0 : std::exp(-spec.k * t) * hermite(spec.k, xi[0]);
    }
    return 0.0;
}

} // namespace wou::mc
