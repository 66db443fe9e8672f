#include "wou/harness.hpp"

#include "wou/galerkin.hpp"
#include "wou/rng.hpp"
#include "wou/wiener.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <ostream>

namespace wou::harness {

namespace {

constexpr double kGridFloor = 1e-6;
const char* const kRatioQuantities[] = {"L2_ratio", "grad_ratio", "hess_ratio"};

double ratio_bound(int q, double lambda)
{
    switch (q) {
    case 0: return 1.0 / lambda;
    case 1: return 1.0 / std::sqrt(lambda);
    default: return std::numbers::sqrt2;
    }
}

// exp(logw - max logw), so that the largest weight is 1.
std::vector<double> normalized_weights(std::vector<double> logw)
{
    const double top = *std::max_element(logw.begin(), logw.end());
    for (double& l : logw) l = std::exp(l - top);
    return logw;
}

double wmean(std::span<const double> w, std::span<const double> v)
{
    double sw = 0.0, s = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        sw += w[k];
        s += w[k] * v[k];
    }
    return s / sw;
}

struct Ratio {
    double estimate = 0.0;
    double std_error = 0.0;
};

// sqrt(E[num] / E[den]) under the self-normalized weights, delta-method error.
Ratio sqrt_ratio(std::span<const double> w, std::span<const double> num, std::span<const double> den)
{
    const double A = wmean(w, num);
    const double B = wmean(w, den);
    const double R2 = std::max(A, 0.0) / B;
    std::vector<double> z(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) z[k] = (num[k] - R2 * den[k]) / B;
    const double se2 = weighted_mean(w, z).std_error;
    const double R = std::sqrt(R2);
    return {R, R > 0.0 ? se2 / (2.0 * R) : std::sqrt(se2)};
}

void report(const Progress& progress, const std::string& msg)
{
    if (progress) progress(msg);
}

std::string fmt_lambda(double l)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", l);
    return buf;
}

WeightSpec spec_for(const ExperimentConfig& cfg, const std::string& id)
{
    for (const auto& w : cfg.weights)
        if (w.id == id) return w;
    return WeightSpec{id, {}, {}};
}

std::uint64_t row_seed(std::uint64_t master, const std::string& tag, const std::string& weight, int n, double lambda)
{
    return derive_seed(master, tag + "/" + weight + "/" + std::to_string(n) + "/" + fmt_lambda(lambda));
}

// ---------------------------------------------------------------------------
// Grid route

struct TestFn {
    Vec a;
    double b = 0.0;
};

std::vector<TestFn> weak_test_functions(int n, int count, std::uint64_t seed)
{
    std::vector<TestFn> out;
    for (int j = 0; j < count; ++j) {
        NormalStream rng(seed, static_cast<std::uint64_t>(j));
        TestFn t;
        t.a.resize(n);
        for (int i = 0; i < n; ++i) t.a[i] = 0.5 * rng.next();
        t.b = 2.0 * std::numbers::pi * rng.uniform();
        out.push_back(std::move(t));
    }
    return out;
}

struct GridEval {
    double ratio[3] = {0, 0, 0};
    double sup = 0.0;
    double grad_sup = 0.0;
    std::vector<double> weak; // signed, relative to ||f|| (||phi|| + ||grad phi||)
};

GridEval grid_eval(const grid::GridOperator& op, const SmoothFn& f, double lambda, double f_sup,
                   const std::vector<TestFn>& tests)
{
    const grid::GridSolution s = op.solve_elliptic([&](VecIn x) { return f(x); }, lambda);
    const grid::GridSpec& spec = op.spec();
    const int n = spec.dim;
    const int a = spec.axis_count();
    const double h2 = spec.mesh * spec.mesh;
    const double phi_min = op.potential().minCoeff();
    const auto N = spec.size();

    std::vector<double> w, f2, u2, g2, H2, fv, uv;
    std::vector<Vec> pts, grads;
    GridEval out;
    for (Eigen::Index idx = 0; idx < N; ++idx) {
        const double uu = s.values[idx];
        out.sup = std::max(out.sup, std::abs(uu));
        if (s.on_boundary(idx)) continue;
        const Vec x = s.point(idx);
        const double fx = f(x);
        const Vec g = s.gradient.row(idx).transpose();
        out.grad_sup = std::max(out.grad_sup, g.norm());
        double hs = 0.0;
        const int i = static_cast<int>(idx % a);
        if (n == 1) {
            const double d = (s.values[idx + 1] - 2.0 * uu + s.values[idx - 1]) / h2;
            hs = d * d;
        } else {
            const int j = static_cast<int>(idx / a);
            const double d00 = (s.values[s.index(i + 1, j)] - 2.0 * uu + s.values[s.index(i - 1, j)]) / h2;
            const double d11 = (s.values[s.index(i, j + 1)] - 2.0 * uu + s.values[s.index(i, j - 1)]) / h2;
            const double d01 = (s.values[s.index(i + 1, j + 1)] - s.values[s.index(i + 1, j - 1)] -
                                s.values[s.index(i - 1, j + 1)] + s.values[s.index(i - 1, j - 1)]) /
                               (4.0 * h2);
            hs = d00 * d00 + d11 * d11 + 2.0 * d01 * d01;
        }
        w.push_back(std::exp(-(op.potential()[idx] - phi_min) - 0.5 * x.squaredNorm()));
        f2.push_back(fx * fx);
        u2.push_back(uu * uu);
        g2.push_back(g.squaredNorm());
        H2.push_back(hs);
        fv.push_back(fx);
        uv.push_back(uu);
        pts.push_back(x);
        grads.push_back(g);
    }
    const double fn = std::sqrt(wmean(w, f2));
    out.ratio[0] = std::sqrt(wmean(w, u2)) / fn;
    out.ratio[1] = std::sqrt(wmean(w, g2)) / fn;
    out.ratio[2] = std::sqrt(wmean(w, H2)) / fn;
    out.sup /= f_sup;
    out.grad_sup /= f_sup;

    // lambda <u,phi> + <grad u, grad phi> - <f,phi>, relative to ||f|| (||phi|| + ||grad phi||).
    for (const TestFn& t : tests) {
        double sw = 0.0, r = 0.0, p2 = 0.0, dp2 = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double arg = t.a.dot(pts[k]) + t.b;
            const double p = std::cos(arg);
            const double dp = -std::sin(arg);
            r += w[k] * (lambda * uv[k] * p + dp * t.a.dot(grads[k]) - fv[k] * p);
            p2 += w[k] * p * p;
            dp2 += w[k] * dp * dp * t.a.squaredNorm();
            sw += w[k];
        }
        out.weak.push_back((r / sw) / (fn * (std::sqrt(p2 / sw) + std::sqrt(dp2 / sw))));
    }
    return out;
}

void grid_rows(const ExperimentConfig& cfg, const WeightSpec& ws, int n, const ConvexWeight& w,
               std::vector<ReportRow>& rows, const Progress& progress)
{
    grid::GridSpec fine = *cfg.grid;
    fine.dim = n;
    if (n == 2) fine.mesh = cfg.grid_mesh_2d;
    grid::GridSpec coarse = fine;
    coarse.mesh = 2.0 * fine.mesh;
    const grid::GridOperator op_h(w, fine);
    const grid::GridOperator op_2h(w, coarse);
    const std::string note = "grid h=" + fmt_lambda(fine.mesh) + ", allowance 2|r(h)-r(2h)|";

    for (double lambda : cfg.lambdas) {
        report(progress, ws.id + " n=" + std::to_string(n) + " lambda=" + fmt_lambda(lambda) + " [grid]");
        const auto tests =
            weak_test_functions(n, cfg.weak_tests, row_seed(cfg.seed, "weak", ws.id, n, lambda));
        for (const auto& fid : cfg.test_functions) {
            const SmoothFn f = make_function(fid, n);
            try {
                const double f_sup = f.sup_norm() ? *f.sup_norm()
                                                  : op_h.sample([&](VecIn x) { return f(x); }).cwiseAbs().maxCoeff();
                const GridEval eh = grid_eval(op_h, f, lambda, f_sup, tests);
                const GridEval e2 = grid_eval(op_2h, f, lambda, f_sup, tests);
                auto allow = [](double a, double b) { return 2.0 * std::abs(a - b) + kGridFloor; };
                for (int q = 0; q < 3; ++q)
                    rows.push_back(make_row(ws.id, n, lambda, fid, kRatioQuantities[q], eh.ratio[q], 0.0,
                                            ratio_bound(q, lambda), allow(eh.ratio[q], e2.ratio[q]), note));
                if (f.sup_norm()) {
                    rows.push_back(make_row(ws.id, n, lambda, fid, "sup_ratio", eh.sup, 0.0, 1.0 / lambda,
                                            allow(eh.sup, e2.sup), note));
                    rows.push_back(make_row(ws.id, n, lambda, fid, "grad_sup_ratio", eh.grad_sup, 0.0,
                                            std::sqrt(std::numbers::pi / lambda), allow(eh.grad_sup, e2.grad_sup),
                                            note));
                }
                if (!tests.empty()) {
                    double worst = 0.0, gap = 0.0;
                    for (std::size_t j = 0; j < tests.size(); ++j) {
                        worst = std::max(worst, std::abs(eh.weak[j]));
                        gap = std::max(gap, std::abs(eh.weak[j] - e2.weak[j]));
                    }
                    // The residual targets zero, so h^2 stands in for the consistency error where
                    // the two meshes are not yet in the asymptotic regime.
                    rows.push_back(make_row(ws.id, n, lambda, fid, "weak_identity", worst, 0.0, 0.0,
                                            2.0 * gap + fine.mesh * fine.mesh + kGridFloor,
                                            note + " + h^2, max over " + std::to_string(tests.size()) +
                                                " test functions"));
                }
            } catch (const std::exception& e) {
                for (int q = 0; q < 3; ++q)
                    rows.push_back(failed_row(ws.id, n, lambda, fid, kRatioQuantities[q], ratio_bound(q, lambda),
                                              e.what()));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo route

struct McRatios {
    Ratio ratio[3];
    double allowance[3] = {0, 0, 0};
    bool has_sup = false;
    Ratio sup, grad_sup;
    double sup_allow = 0.0, grad_sup_allow = 0.0;
};

// Ratios for all functions at one (weight, n, lambda). Outer points come from
// stream k of outer_seed and share their leading coordinates across n; inner
// paths for outer point k use derive_seed(inner_seed, k).
std::vector<McRatios> mc_ratios(const ExperimentConfig& cfg, const ConvexWeight& w, int n, double lambda,
                                const std::vector<SmoothFn>& fs, std::uint64_t outer_seed, std::uint64_t inner_seed)
{
    const long K = cfg.outer_samples;
    const std::size_t F = fs.size();
    Mat xi(n, K);
    std::vector<double> logw(K);
    for (long k = 0; k < K; ++k) {
        NormalStream rng(outer_seed, static_cast<std::uint64_t>(k));
        for (int i = 0; i < n; ++i) xi(i, k) = rng.next();
        logw[k] = -w.value(xi.col(k));
    }
    const std::vector<double> wt = normalized_weights(logw);

    struct Acc {
        std::vector<double> f2, q[3], b2[3];
        double sup = 0, sup_se = 0, sup_bias = 0, gsup = 0, gsup_se = 0, gsup_bias = 0;
    };
    std::vector<Acc> acc(F);
    for (long k = 0; k < K; ++k) {
        mc::DiffusionConfig dc = cfg.mc;
        dc.seed = derive_seed(inner_seed, static_cast<std::uint64_t>(k));
        const auto ds = mc::resolvent_derivatives(w, fs, lambda, xi.col(k), dc, cfg.fd_step, cfg.richardson);
        for (std::size_t m = 0; m < F; ++m) {
            const auto& d = ds[m];
            Acc& a = acc[m];
            const double fx = fs[m](xi.col(k));
            a.f2.push_back(fx * fx);
            a.q[0].push_back(d.value.mean * d.value.mean - d.value.std_error * d.value.std_error);
            a.b2[0].push_back(d.value.bias_bound * d.value.bias_bound);
            double g2 = 0.0, gb = 0.0, gse = 0.0;
            for (const auto& g : d.gradient) {
                g2 += g.mean * g.mean - g.std_error * g.std_error;
                gb += g.bias_bound * g.bias_bound;
                gse += g.mean * g.mean * g.std_error * g.std_error;
            }
            a.q[1].push_back(g2);
            a.b2[1].push_back(gb);
            double h2 = 0.0, hb = 0.0;
            for (const auto& h : d.hessian) {
                h2 += h.mean * h.mean - h.std_error * h.std_error;
                hb += h.bias_bound * h.bias_bound;
            }
            a.q[2].push_back(h2);
            a.b2[2].push_back(hb);
            if (std::abs(d.value.mean) > a.sup) {
                a.sup = std::abs(d.value.mean);
                a.sup_se = d.value.std_error;
                a.sup_bias = d.value.bias_bound;
            }
            const double gnorm = d.gradient_mean().norm();
            if (gnorm > a.gsup) {
                a.gsup = gnorm;
                a.gsup_se = gnorm > 0.0 ? std::sqrt(gse) / gnorm : 0.0;
                a.gsup_bias = std::sqrt(gb);
            }
        }
    }

    std::vector<McRatios> out(F);
    for (std::size_t m = 0; m < F; ++m) {
        const Acc& a = acc[m];
        const double fn = std::sqrt(wmean(wt, a.f2));
        for (int q = 0; q < 3; ++q) {
            out[m].ratio[q] = sqrt_ratio(wt, a.q[q], a.f2);
            out[m].allowance[q] = std::sqrt(wmean(wt, a.b2[q])) / fn;
        }
        if (const auto s = fs[m].sup_norm()) {
            out[m].has_sup = true;
            out[m].sup = {a.sup / *s, a.sup_se / *s};
            out[m].sup_allow = a.sup_bias / *s;
            out[m].grad_sup = {a.gsup / *s, a.gsup_se / *s};
            out[m].grad_sup_allow = a.gsup_bias / *s;
        }
    }
    return out;
}

void push_mc_rows(const std::string& weight, int n, double lambda, const std::vector<std::string>& names,
                  const std::vector<McRatios>& rs, const std::string& note, std::vector<ReportRow>& rows)
{
    for (std::size_t m = 0; m < names.size(); ++m) {
        const McRatios& r = rs[m];
        for (int q = 0; q < 3; ++q)
            rows.push_back(make_row(weight, n, lambda, names[m], kRatioQuantities[q], r.ratio[q].estimate,
                                    r.ratio[q].std_error, ratio_bound(q, lambda), r.allowance[q], note));
        if (r.has_sup) {
            rows.push_back(make_row(weight, n, lambda, names[m], "sup_ratio", r.sup.estimate, r.sup.std_error,
                                    1.0 / lambda, r.sup_allow, note));
            rows.push_back(make_row(weight, n, lambda, names[m], "grad_sup_ratio", r.grad_sup.estimate,
                                    r.grad_sup.std_error, std::sqrt(std::numbers::pi / lambda), r.grad_sup_allow,
                                    note));
        }
    }
}

std::string mc_note(const ExperimentConfig& cfg)
{
    return "mc outer=" + std::to_string(cfg.outer_samples) + " paths=" + std::to_string(cfg.mc.paths) +
           " dt=" + fmt_lambda(cfg.mc.dt) + " fd_step=" + fmt_lambda(cfg.fd_step) +
           (cfg.richardson ? " richardson" : "");
}

void mc_rows(const ExperimentConfig& cfg, const WeightSpec& ws, int n, const ConvexWeight& w,
             std::vector<ReportRow>& rows, const Progress& progress)
{
    std::vector<SmoothFn> fs;
    for (const auto& id : cfg.test_functions) fs.push_back(make_function(id, n));
    for (double lambda : cfg.lambdas) {
        report(progress, ws.id + " n=" + std::to_string(n) + " lambda=" + fmt_lambda(lambda) + " [mc]");
        try {
            const auto rs = mc_ratios(cfg, w, n, lambda, fs, row_seed(cfg.seed, "outer", ws.id, n, lambda),
                                      row_seed(cfg.seed, "inner", ws.id, n, lambda));
            push_mc_rows(ws.id, n, lambda, cfg.test_functions, rs, mc_note(cfg), rows);
        } catch (const std::exception& e) {
            for (const auto& fid : cfg.test_functions)
                for (int q = 0; q < 3; ++q)
                    rows.push_back(failed_row(ws.id, n, lambda, fid, kRatioQuantities[q], ratio_bound(q, lambda),
                                              e.what()));
        }
    }
}

// ---------------------------------------------------------------------------
// Dimension probe and truncation ladder

void probe(const ExperimentConfig& cfg, EstimateReport& rep, const Progress& progress)
{
    const ProbeConfig& p = cfg.probe;
    const double lambda = p.lambda;
    const std::string fname = "probe:" + p.function;
    for (const auto& id : p.weights) {
        const WeightSpec ws = spec_for(cfg, id);
        // Shared across n, so the leading coordinates and their noise coincide.
        const std::uint64_t outer = derive_seed(cfg.seed, "probe/outer/" + id);
        const std::uint64_t inner = derive_seed(cfg.seed, "probe/inner/" + id);
        std::vector<double> xs, est[3], se[3];
        bool ok = true;
        for (int n : p.dims) {
            report(progress, id + " n=" + std::to_string(n) + " lambda=" + fmt_lambda(lambda) + " [probe]");
            try {
                const ConvexWeight w = make_weight(ws, n, cfg.seed);
                const std::vector<SmoothFn> fs{make_function(p.function, n)};
                const auto rs = mc_ratios(cfg, w, n, lambda, fs, outer, inner);
                push_mc_rows(id, n, lambda, {fname}, rs, mc_note(cfg) + ", common random numbers across n", rep.rows);
                xs.push_back(n);
                for (int q = 0; q < 3; ++q) {
                    est[q].push_back(rs[0].ratio[q].estimate);
                    se[q].push_back(rs[0].ratio[q].std_error);
                }
            } catch (const std::exception& e) {
                ok = false;
                for (int q = 0; q < 3; ++q)
                    rep.rows.push_back(
                        failed_row(id, n, lambda, fname, kRatioQuantities[q], ratio_bound(q, lambda), e.what()));
            }
        }
        for (int q = 0; q < 3; ++q) {
            SlopeRow s;
            s.weight = id;
            s.quantity = kRatioQuantities[q];
            if (!ok || xs.size() < 2) {
                s.slope = NAN;
                s.std_error = NAN;
                s.pass = false;
                rep.slopes.push_back(s);
                continue;
            }
            double xbar = 0.0;
            for (double x : xs) xbar += x;
            xbar /= static_cast<double>(xs.size());
            double sxx = 0.0;
            for (double x : xs) sxx += (x - xbar) * (x - xbar);
            double slope = 0.0, var = 0.0;
            for (std::size_t k = 0; k < xs.size(); ++k) {
                const double c = (xs[k] - xbar) / sxx;
                slope += c * est[q][k];
                var += c * c * se[q][k] * se[q][k];
            }
            s.slope = slope;
            s.std_error = std::sqrt(var);
            s.pass = std::abs(slope) <= 2.0 * s.std_error + 1e-12;
            rep.slopes.push_back(s);
        }
    }
}

std::shared_ptr<const galerkin::CylindricalBase> full_weight(const WeightSpec& ws)
{
    const auto modes = static_cast<int>(ws.param("modes", 256));
    if (ws.id == "energy") return std::make_shared<const wiener::EnergyWeight>(modes);
    if (ws.id == "max_endpoint")
        return std::make_shared<const wiener::MaxEndpointWeight>(modes, static_cast<int>(ws.param("grid", 256)));
    throw DomainError("ladder: weight '" + ws.id + "' has no infinite-dimensional master");
}

void ladder(const ExperimentConfig& cfg, EstimateReport& rep, const Progress& progress)
{
    const LadderConfig& L = cfg.ladder;
    const WeightSpec ws = spec_for(cfg, L.weight);
    const auto base = full_weight(ws);
    const ConvexWeight U = base->as_weight();
    const int m = U.dim;
    for (int n : L.dims) {
        report(progress, ws.id + " n=" + std::to_string(n) + " [ladder]");
        LadderRow row;
        row.weight = ws.id;
        row.n = n;
        const ConvexWeight psi = make_weight(ws, n, cfg.seed);
        galerkin::McOptions mc;
        mc.samples = L.samples;
        mc.seed = derive_seed(cfg.seed, "ladder/" + ws.id);
        const MCValue c = galerkin::gradient_correction_norm(U, psi, n, mc);
        row.correction = std::sqrt(std::max(c.mean, 0.0));
        row.correction_se = row.correction > 0.0 ? c.std_error / (2.0 * row.correction) : std::sqrt(c.std_error);

        if (cfg.grid && n <= cfg.grid_max_dim) {
            // With V_n solving the truncated equation, lambda V_n - L_nu V_n - f
            // reduces to -<grad U - grad psi_n, grad V_n> on the first n coordinates.
            grid::GridSpec spec = *cfg.grid;
            spec.dim = n;
            if (n == 2) spec.mesh = cfg.grid_mesh_2d;
            const SmoothFn f = make_function(L.function, n);
            const grid::GridSolution V = grid::solve_elliptic_grid(psi, [&](VecIn x) { return f(x); }, L.lambda, spec);
            std::vector<double> logw(L.samples), r2(L.samples);
            Vec x(m), gU(m), gp(n);
            for (long j = 0; j < L.samples; ++j) {
                NormalStream rng(mc.seed, static_cast<std::uint64_t>(j));
                for (int i = 0; i < m; ++i) x[i] = rng.next();
                logw[j] = -U.value_and_gradient(x, gU);
                const Vec xi = x.head(n);
                psi.gradient(xi, gp);
                const Vec gv = xi.cwiseAbs().maxCoeff() < spec.radius ? V.interpolate_gradient(xi) : Vec::Zero(n);
                const double r = (gU.head(n) - gp).dot(gv);
                r2[j] = r * r;
            }
            const MCValue res = weighted_mean(normalized_weights(logw), r2);
            const double rv = std::sqrt(std::max(res.mean, 0.0));
            row.residual = rv;
            row.residual_se = rv > 0.0 ? res.std_error / (2.0 * rv) : std::sqrt(res.std_error);
        }
        rep.ladder.push_back(row);
    }
}

// ---------------------------------------------------------------------------
// Domain characterization

struct DomainSums {
    double w = 0, u2 = 0, Lu2 = 0, g2 = 0, h2 = 0, uLu = 0;
    void add(double wk, double u, double Lu, double g, double h)
    {
        w += wk;
        u2 += wk * u * u;
        Lu2 += wk * Lu * Lu;
        g2 += wk * g;
        h2 += wk * h;
        uLu += wk * u * Lu;
    }
    // ||u||_{W22} / ||u||_D, ||u||_D / ||u||_{W22}, int u L u / int u^2.
    double upper() const { return (std::sqrt(u2) + std::sqrt(g2) + std::sqrt(h2)) / (std::sqrt(u2) + std::sqrt(Lu2)); }
    double lower() const { return 1.0 / upper(); }
    double dissipativity() const { return u2 > 0.0 ? uLu / u2 : 0.0; }
};

Ratio batch_estimate(const DomainSums& total, const std::vector<DomainSums>& batches, double (DomainSums::*q)() const)
{
    const double est = (total.*q)();
    double s = 0.0, s2 = 0.0;
    for (const auto& b : batches) {
        const double v = (b.*q)() - est;
        s += v;
        s2 += v * v;
    }
    const double B = static_cast<double>(batches.size());
    const double var = std::max(0.0, (s2 - s * s / B) / (B - 1.0));
    return {est, std::sqrt(var / B)};
}

} // namespace

MCValue weighted_norm(const SmoothFn& g, const ConvexWeight& w, Order order, const WeightedSampling& s)
{
    require(s.samples >= 2, "weighted_norm: need at least two samples");
    const int n = w.dim;
    std::vector<double> logw(s.samples), vals(s.samples);
    Vec x(n);
    for (long k = 0; k < s.samples; ++k) {
        NormalStream rng(s.seed, static_cast<std::uint64_t>(k));
        for (int i = 0; i < n; ++i) x[i] = rng.next();
        logw[k] = -w.value(x);
        if (order == Order::value) {
            const double v = g(x);
            vals[k] = v * v;
        } else {
            const Jet j = g.jet(x);
            vals[k] = order == Order::gradient ? j.grad.squaredNorm() : j.hess.squaredNorm();
        }
        require_finite(vals[k], "weighted_norm integrand");
    }
    const MCValue m = weighted_mean(normalized_weights(logw), vals);
    MCValue out = m;
    out.mean = std::sqrt(std::max(m.mean, 0.0));
    out.std_error = out.mean > 0.0 ? m.std_error / (2.0 * out.mean) : std::sqrt(m.std_error);
    return out;
}

EstimateReport verify_main_estimates(const ExperimentConfig& cfg, const Progress& progress)
{
    cfg.validate();
    EstimateReport rep;
    for (const WeightSpec& ws : cfg.weights) {
        for (int n : cfg.dims_for(ws)) {
            ConvexWeight w;
            try {
                w = make_weight(ws, n, cfg.seed);
            } catch (const std::exception& e) {
                for (double lambda : cfg.lambdas)
                    for (const auto& fid : cfg.test_functions)
                        for (int q = 0; q < 3; ++q)
                            rep.rows.push_back(failed_row(ws.id, n, lambda, fid, kRatioQuantities[q],
                                                          ratio_bound(q, lambda), e.what()));
                continue;
            }
            if (cfg.grid && n <= cfg.grid_max_dim)
                grid_rows(cfg, ws, n, w, rep.rows, progress);
            else
                mc_rows(cfg, ws, n, w, rep.rows, progress);
        }
    }
    if (cfg.probe.enabled) probe(cfg, rep, progress);
    if (cfg.ladder.enabled) {
        try {
            ladder(cfg, rep, progress);
        } catch (const std::exception& e) {
            report(progress, std::string("ladder skipped: ") + e.what());
        }
    }
    rep.sort();
    return rep;
}

EstimateReport verify_domain_equivalence(const ExperimentConfig& cfg, const Progress& progress)
{
    cfg.validate();
    EstimateReport rep;
    const double upper_bound = 2.0 + std::numbers::sqrt2;
    for (const WeightSpec& ws : cfg.weights) {
        for (int n : cfg.dims_for(ws)) {
            report(progress, ws.id + " n=" + std::to_string(n) + " [domain]");
            std::vector<SmoothFn> us;
            for (const auto& id : cfg.test_functions) us.push_back(make_function(id, n));
            const std::size_t F = us.size();
            try {
                const ConvexWeight w = make_weight(ws, n, cfg.seed);
                const long K = cfg.domain_samples;
                const int B = cfg.domain_batches;
                const std::uint64_t seed = row_seed(cfg.seed, "domain", ws.id, n, 0.0);
                std::vector<double> logw(K);
                Mat X(n, K), G(n, K);
                Vec g(n);
                for (long k = 0; k < K; ++k) {
                    NormalStream rng(seed, static_cast<std::uint64_t>(k));
                    for (int i = 0; i < n; ++i) X(i, k) = rng.next();
                    logw[k] = -w.value_and_gradient(X.col(k), g);
                    G.col(k) = g;
                }
                const std::vector<double> wt = normalized_weights(logw);
                std::vector<DomainSums> total(F);
                std::vector<std::vector<DomainSums>> batches(F, std::vector<DomainSums>(B));
                for (long k = 0; k < K; ++k) {
                    const auto b = static_cast<std::size_t>(k * B / K);
                    const Vec x = X.col(k);
                    for (std::size_t m = 0; m < F; ++m) {
                        const Jet j = us[m].jet(x);
                        const double Lu = j.hess.trace() - (G.col(k) + x).dot(j.grad);
                        const double g2 = j.grad.squaredNorm();
                        const double h2 = j.hess.squaredNorm();
                        require_finite(Lu, "domain integrand");
                        total[m].add(wt[k], j.value, Lu, g2, h2);
                        batches[m][b].add(wt[k], j.value, Lu, g2, h2);
                    }
                }
                const std::string note = "importance sampling " + std::to_string(K) + " samples, " +
                                         std::to_string(B) + " batches";
                for (std::size_t m = 0; m < F; ++m) {
                    const auto& fid = cfg.test_functions[m];
                    const Ratio up = batch_estimate(total[m], batches[m], &DomainSums::upper);
                    const Ratio lo = batch_estimate(total[m], batches[m], &DomainSums::lower);
                    const Ratio di = batch_estimate(total[m], batches[m], &DomainSums::dissipativity);
                    rep.rows.push_back(make_row(ws.id, n, 0.0, fid, "domain_equiv_ratio", up.estimate, up.std_error,
                                                upper_bound, 0.0, note + ", ||u||_W22 / ||u||_D"));
                    rep.rows.push_back(make_row(ws.id, n, 0.0, fid, "domain_lower_ratio", lo.estimate, lo.std_error,
                                                1.0, 0.0, note + ", ||u||_D / ||u||_W22"));
                    rep.rows.push_back(make_row(ws.id, n, 0.0, fid, "dissipativity", di.estimate, di.std_error, 0.0,
                                                0.0, note + ", int u L u / int u^2"));
                }
            } catch (const std::exception& e) {
                for (const auto& fid : cfg.test_functions) {
                    rep.rows.push_back(failed_row(ws.id, n, 0.0, fid, "domain_equiv_ratio", upper_bound, e.what()));
                    rep.rows.push_back(failed_row(ws.id, n, 0.0, fid, "domain_lower_ratio", 1.0, e.what()));
                    rep.rows.push_back(failed_row(ws.id, n, 0.0, fid, "dissipativity", 0.0, e.what()));
                }
            }
        }
    }
    rep.sort();
    return rep;
}

int run_experiment(const std::filesystem::path& config, const RunOverrides& ov, std::ostream& out, std::ostream& err)
{
    ExperimentConfig cfg;
    try {
        cfg = load_config(config);
        if (ov.seed) cfg.seed = *ov.seed;
        if (ov.output_dir) cfg.output_dir = *ov.output_dir;
        if (ov.paths) cfg.mc.paths = *ov.paths;
        if (ov.kind) cfg.kind = *ov.kind;
        cfg.validate();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    }

    Progress progress;
    if (!ov.quiet) progress = [&out](const std::string& msg) { out << "  " << msg << '\n' << std::flush; };
    EstimateReport rep;
    try {
        rep = cfg.kind == ExperimentKind::estimates ? verify_main_estimates(cfg, progress)
                                                    : verify_domain_equivalence(cfg, progress);
        write_artifacts(rep, cfg.output_dir);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    if (!ov.quiet) rep.write_summary(out);
    if (rep.all_pass()) return 0;
    for (const ReportRow* r : rep.failures())
        err << "failed: " << r->weight << " n=" << r->n << " lambda=" << r->lambda << " " << r->function << " "
            << r->quantity << '\n';
    for (const auto& s : rep.slopes)
        if (!s.pass) err << "failed: slope probe " << s.weight << " " << s.quantity << '\n';
    return 1;
}

} // namespace wou::harness
