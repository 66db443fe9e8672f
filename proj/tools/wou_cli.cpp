#include "wou/harness.hpp"
#include "wou/prox.hpp"
#include "wou/semigroup.hpp"
#include "wou/wiener.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace wou;

Vec to_vec(const std::vector<double>& v)
{
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string join(const Vec& v)
{
    std::string out;
    char buf[32];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.10g", i ? " " : "", v[i]);
        out += buf;
    }
    return out;
}

ConvexWeight pick_weight(const std::string& id, int n, double param)
{
    if (id == "zero") return weights::zero(n);
    if (id == "quadratic") return weights::quadratic(n, param);
    if (id == "huber") return weights::huber(n, param);
    if (id == "l1") return weights::l1(n);
    if (id == "energy") return wiener::EnergyWeight(256).truncation(n);
    throw DomainError("unknown weight '" + id + "' (zero, quadratic, huber, l1, energy)");
}

SmoothFn pick_function(const std::string& id, int n)
{
    if (id == "linear") return fns::linear(Vec::Ones(n) / std::sqrt(double(n)));
    return harness::make_function(id, n);
}

struct Common {
    std::optional<std::uint64_t> seed;
    std::optional<long> paths;
    bool quiet = false;
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--seed", c.seed, "Master seed");
    app->add_option("--paths", c.paths, "Monte Carlo paths");
    app->add_flag("--quiet", c.quiet, "Only print results");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Weighted Ornstein-Uhlenbeck toolkit"};
    app.require_subcommand(1);

    // prox
    Common prox_c;
    std::string prox_weight = "huber";
    double prox_param = 0.5, prox_alpha = 1.0;
    std::vector<double> prox_x{1.0};
    auto* prox = app.add_subcommand("prox", "Proximal point and Moreau envelope of a convex weight");
    prox->add_option("--weight", prox_weight, "zero, quadratic, huber, l1, energy")->capture_default_str();
    prox->add_option("--param", prox_param, "Curvature c or Huber threshold")->capture_default_str();
    prox->add_option("--alpha", prox_alpha, "Envelope parameter")->capture_default_str();
    prox->add_option("--x", prox_x, "Point")->expected(1, -1);
    add_common(prox, prox_c);

    // semigroup / resolvent
    Common sg_c;
    std::string sg_weight = "zero", sg_fn = "cos";
    double sg_param = 1.0, sg_t = 1.0, sg_dt = 1e-3, sg_lambda = 1.0;
    std::vector<double> sg_xi{0.5};
    auto setup_mc = [&](CLI::App* sub) {
        sub->add_option("--weight", sg_weight, "zero, quadratic, huber, l1, energy")->capture_default_str();
        sub->add_option("--param", sg_param, "Weight parameter")->capture_default_str();
        sub->add_option("--function", sg_fn, "linear, cos, tanh, indicator, constant, xi1, hermite2")
            ->capture_default_str();
        sub->add_option("--xi", sg_xi, "Start point")->expected(1, -1);
        sub->add_option("--dt", sg_dt, "Euler-Maruyama step")->capture_default_str();
        add_common(sub, sg_c);
    };
    auto* semigroup = app.add_subcommand("semigroup", "Monte Carlo T_t f(xi)");
    setup_mc(semigroup);
    semigroup->add_option("--t", sg_t, "Time")->capture_default_str();
    auto* resolvent = app.add_subcommand("resolvent", "Monte Carlo R(lambda) f(xi)");
    setup_mc(resolvent);
    resolvent->add_option("--lambda", sg_lambda, "Resolvent parameter")->capture_default_str();

    // wiener-demo
    Common wd_c;
    int wd_modes = 64, wd_grid = 2048;
    std::string wd_csv;
    auto* wdemo = app.add_subcommand("wiener-demo", "Sample a Brownian path and evaluate the two Wiener weights");
    wdemo->add_option("--modes", wd_modes, "Karhunen-Loeve modes")->capture_default_str();
    wdemo->add_option("--grid", wd_grid, "Grid points on [0,1]")->capture_default_str();
    wdemo->add_option("--csv", wd_csv, "Write the path as s,W");
    add_common(wdemo, wd_c);

    // verify-*
    Common v_c;
    std::string v_config;
    std::optional<std::string> v_out;
    auto setup_verify = [&](CLI::App* sub) {
        sub->add_option("--config", v_config, "Experiment config (INI)")->required();
        sub->add_option("--out", v_out, "Output directory");
        add_common(sub, v_c);
    };
    auto* vest = app.add_subcommand("verify-estimates", "Check the resolvent estimates over a weight/dimension matrix");
    setup_verify(vest);
    auto* vdom = app.add_subcommand("verify-domain", "Check the domain norm equivalence and dissipativity");
    setup_verify(vdom);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*prox) {
            const Vec x = to_vec(prox_x);
            const ConvexWeight w = pick_weight(prox_weight, static_cast<int>(x.size()), prox_param);
            const prox::ProxResult r = prox::prox_point(w, x, prox_alpha);
            std::cout << "minimizer " << join(r.minimizer) << '\n'
                      << "envelope " << join(Vec::Constant(1, r.envelope)) << '\n'
                      << "gradient " << join(r.gradient) << '\n';
            if (!prox_c.quiet) std::cout << "iterations " << r.iterations << "\nresidual " << r.residual << '\n';
            return 0;
        }
        if (*semigroup || *resolvent) {
            const Vec xi = to_vec(sg_xi);
            const int n = static_cast<int>(xi.size());
            const ConvexWeight w = pick_weight(sg_weight, n, sg_param);
            const SmoothFn f = pick_function(sg_fn, n);
            mc::DiffusionConfig cfg;
            cfg.dt = sg_dt;
            if (sg_c.seed) cfg.seed = *sg_c.seed;
            if (sg_c.paths) cfg.paths = *sg_c.paths;
            const MCValue v =
                *semigroup ? mc::semigroup_apply(w, f, sg_t, xi, cfg) : mc::resolvent_apply(w, f, sg_lambda, xi, cfg);
            std::printf("mean %.10g\nstd_error %.10g\n", v.mean, v.std_error);
            if (!sg_c.quiet) {
                std::printf("paths %ld\nbias_bound %.10g\n", v.paths_used, v.bias_bound);
                if (*semigroup && sg_weight == "zero" && (sg_fn == "linear" || sg_fn == "cos")) {
                    mc::MehlerSpec spec;
                    spec.kind = sg_fn == "linear" ? mc::MehlerKind::linear : mc::MehlerKind::cosine;
                    spec.a = sg_fn == "linear" ? Vec(Vec::Ones(n) / std::sqrt(double(n))) : Vec();
                    if (sg_fn == "cos") {
                        Vec a(n);
                        for (int i = 0; i < n; ++i) a[i] = 1.0 / (i + 1);
                        spec.a = a / a.norm();
                    }
                    std::printf("mehler %.10g\n", mc::mehler_oracle(spec, sg_t, xi));
                }
            }
            return 0;
        }
        if (*wdemo) {
            const wiener::WienerBasis basis(wd_modes);
            const wiener::KLPathSample path = wiener::sample_path(basis, wd_c.seed.value_or(1), wd_grid);
            const wiener::WeightEval e = wiener::energy_weight(basis, path.coeffs);
            const wiener::MaxEndpointEval m = wiener::max_endpoint_weight(basis, path);
            std::printf("energy %.10g\nmax_endpoint %.10g\nargmax %.10g%s\n", e.value, m.value, m.argmax,
                        m.tie ? " (tie)" : "");
            if (!wd_c.quiet) {
                std::printf("mode,xi,energy_grad,max_endpoint_grad\n");
                for (int i = 0; i < std::min(wd_modes, 16); ++i)
                    std::printf("%d,%.10g,%.10g,%.10g\n", i + 1, path.coeffs[i], e.gradient[i], m.gradient[i]);
            }
            if (!wd_csv.empty()) {
                std::ofstream os(wd_csv);
                if (!os) throw std::runtime_error("cannot write " + wd_csv);
                path.write_csv(os);
            }
            return 0;
        }
        harness::RunOverrides ov;
        ov.seed = v_c.seed;
        ov.paths = v_c.paths;
        ov.quiet = v_c.quiet;
        if (v_out) ov.output_dir = *v_out;
        ov.kind = *vest ? harness::ExperimentKind::estimates : harness::ExperimentKind::domain;
        return harness::run_experiment(v_config, ov, std::cout, std::cerr);
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
