#include "wou/harness.hpp"

#include "wou/galerkin.hpp"
#include "wou/rng.hpp"
#include "wou/wiener.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace wou::harness {

namespace pt = boost::property_tree;

double WeightSpec::param(const std::string& key, double fallback) const
{
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

namespace {

const char* const kWeights[] = {"zero", "quadratic", "huber", "energy", "max_endpoint"};
const char* const kFunctions[] = {"constant", "tanh", "cos", "indicator", "xi1", "hermite2"};

std::vector<std::string> split_list(const std::string& s)
{
    std::string t = s;
    for (char& c : t)
        if (c == ',') c = ' ';
    std::istringstream is(t);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

double to_double(const std::string& key, const std::string& s)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": '" + s + "' is not a finite number");
}

long to_long(const std::string& key, const std::string& s)
{
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": '" + s + "' is not an integer");
}

std::uint64_t to_u64(const std::string& key, const std::string& s)
{
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(s, &used, 0);
        if (used == s.size() && s.front() != '-') return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": '" + s + "' is not an unsigned integer");
}

bool to_bool(const std::string& key, const std::string& s)
{
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw ConfigError(key + ": '" + s + "' is not a boolean");
}

std::vector<int> int_list(const std::string& key, const std::string& s)
{
    std::vector<int> out;
    for (const auto& w : split_list(s)) out.push_back(static_cast<int>(to_long(key, w)));
    return out;
}

std::vector<double> double_list(const std::string& key, const std::string& s)
{
    std::vector<double> out;
    for (const auto& w : split_list(s)) out.push_back(to_double(key, w));
    return out;
}

// Reads section.key if present and applies fn to its text.
template <class Fn>
void with(const pt::ptree& tree, const std::string& path, Fn&& fn)
{
    if (const auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) fn(path, *v);
}

void check_known_keys(const pt::ptree& tree, const std::string& section, std::initializer_list<const char*> keys)
{
    const auto sec = tree.get_child_optional(section);
    if (!sec) return;
    for (const auto& [k, v] : *sec) {
        bool found = false;
        for (const char* key : keys) found = found || k == key;
        if (!found) throw ConfigError("unknown key " + section + "." + k);
    }
}

} // namespace

bool known_weight(const std::string& id)
{
    for (const char* w : kWeights)
        if (id == w) return true;
    return false;
}

bool known_function(const std::string& id)
{
    for (const char* f : kFunctions)
        if (id == f) return true;
    return false;
}

std::vector<int> ExperimentConfig::dims_for(const WeightSpec& w) const
{
    return w.dims.empty() ? dims : w.dims;
}

void ExperimentConfig::validate() const
{
    if (dims.empty()) throw ConfigError("experiment.dims: dims nonempty violated");
    for (int n : dims)
        if (n < 1) throw ConfigError("experiment.dims: every n must be at least 1");
    if (weights.empty()) throw ConfigError("experiment.weights: at least one weight is required");
    for (const auto& w : weights) {
        if (!known_weight(w.id)) throw ConfigError("experiment.weights: unknown weight '" + w.id + "'");
        for (int n : w.dims)
            if (n < 1) throw ConfigError(w.id + ".dims: every n must be at least 1");
    }
    if (kind == ExperimentKind::estimates) {
        if (lambdas.empty()) throw ConfigError("experiment.lambdas: at least one lambda is required");
        for (double l : lambdas)
            if (!(l > 0.0)) throw ConfigError("experiment.lambdas: lambdas > 0 violated");
    }
    if (test_functions.empty()) throw ConfigError("experiment.functions: at least one function is required");
    for (const auto& f : test_functions)
        if (!known_function(f)) throw ConfigError("experiment.functions: unknown function '" + f + "'");
    try {
        mc.validate();
        if (grid) grid->validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (outer_samples < 2) throw ConfigError("mc.outer: need at least two outer samples");
    if (!(fd_step > 0.0)) throw ConfigError("mc.fd_step must be positive");
    if (!(grid_mesh_2d > 0.0)) throw ConfigError("grid.mesh_2d must be positive");
    if (grid_max_dim < 0 || grid_max_dim > 2) throw ConfigError("grid.max_dim must be 0, 1 or 2");
    if (weak_tests < 0) throw ConfigError("grid.weak_tests must be nonnegative");
    if (domain_samples < 2 * domain_batches || domain_batches < 2)
        throw ConfigError("domain: need at least two batches of two samples");
    if (probe.enabled) {
        if (probe.dims.size() < 2) throw ConfigError("probe.dims: need at least two dimensions");
        if (!(probe.lambda > 0.0)) throw ConfigError("probe.lambda: lambdas > 0 violated");
        if (!known_function(probe.function)) throw ConfigError("probe.function: unknown function");
        for (const auto& w : probe.weights)
            if (!known_weight(w)) throw ConfigError("probe.weights: unknown weight '" + w + "'");
    }
    if (ladder.enabled) {
        if (ladder.dims.empty()) throw ConfigError("ladder.dims: dims nonempty violated");
        if (!(ladder.lambda > 0.0)) throw ConfigError("ladder.lambda: lambdas > 0 violated");
        if (!known_weight(ladder.weight)) throw ConfigError("ladder.weight: unknown weight");
        if (!known_function(ladder.function)) throw ConfigError("ladder.function: unknown function");
        if (ladder.samples < 2) throw ConfigError("ladder.samples: need at least two samples");
    }
}

ExperimentConfig parse_config(std::istream& in)
{
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }

    check_known_keys(tree, "experiment", {"kind", "weights", "dims", "lambdas", "functions", "seed", "output_dir"});
    check_known_keys(tree, "mc", {"dt", "paths", "outer", "quad_nodes", "fd_step", "richardson", "t_max"});
    check_known_keys(tree, "grid", {"enabled", "max_dim", "radius", "mesh", "mesh_2d", "boundary", "weak_tests"});
    check_known_keys(tree, "probe", {"enabled", "weights", "dims", "lambda", "function"});
    check_known_keys(tree, "ladder", {"enabled", "weight", "dims", "lambda", "function", "samples"});
    check_known_keys(tree, "domain", {"samples", "batches"});

    ExperimentConfig cfg;
    cfg.grid = grid::GridSpec{};
    cfg.grid->mesh = 1.0 / 16.0;
    cfg.mc.dt = 0.04;
    cfg.mc.paths = 400;
    cfg.mc.quad_nodes = 24;

    with(tree, "experiment.kind", [&](const std::string& k, const std::string& v) {
        if (v == "estimates")
            cfg.kind = ExperimentKind::estimates;
        else if (v == "domain")
            cfg.kind = ExperimentKind::domain;
        else
            throw ConfigError(k + ": expected 'estimates' or 'domain'");
    });
    std::vector<std::string> weight_ids{"energy"};
    with(tree, "experiment.weights", [&](const std::string&, const std::string& v) { weight_ids = split_list(v); });
    with(tree, "experiment.dims", [&](const std::string& k, const std::string& v) { cfg.dims = int_list(k, v); });
    with(tree, "experiment.lambdas",
         [&](const std::string& k, const std::string& v) { cfg.lambdas = double_list(k, v); });
    cfg.test_functions = {"constant", "tanh", "cos", "indicator"};
    with(tree, "experiment.functions",
         [&](const std::string&, const std::string& v) { cfg.test_functions = split_list(v); });
    with(tree, "experiment.seed", [&](const std::string& k, const std::string& v) { cfg.seed = to_u64(k, v); });
    with(tree, "experiment.output_dir", [&](const std::string&, const std::string& v) { cfg.output_dir = v; });

    with(tree, "mc.dt", [&](const std::string& k, const std::string& v) { cfg.mc.dt = to_double(k, v); });
    with(tree, "mc.paths", [&](const std::string& k, const std::string& v) { cfg.mc.paths = to_long(k, v); });
    with(tree, "mc.outer", [&](const std::string& k, const std::string& v) { cfg.outer_samples = to_long(k, v); });
    with(tree, "mc.quad_nodes",
         [&](const std::string& k, const std::string& v) { cfg.mc.quad_nodes = static_cast<int>(to_long(k, v)); });
    with(tree, "mc.fd_step", [&](const std::string& k, const std::string& v) { cfg.fd_step = to_double(k, v); });
    with(tree, "mc.richardson", [&](const std::string& k, const std::string& v) { cfg.richardson = to_bool(k, v); });
    with(tree, "mc.t_max", [&](const std::string& k, const std::string& v) { cfg.mc.t_max = to_double(k, v); });

    bool grid_enabled = true;
    with(tree, "grid.enabled", [&](const std::string& k, const std::string& v) { grid_enabled = to_bool(k, v); });
    with(tree, "grid.max_dim",
         [&](const std::string& k, const std::string& v) { cfg.grid_max_dim = static_cast<int>(to_long(k, v)); });
    with(tree, "grid.radius", [&](const std::string& k, const std::string& v) { cfg.grid->radius = to_double(k, v); });
    with(tree, "grid.mesh", [&](const std::string& k, const std::string& v) { cfg.grid->mesh = to_double(k, v); });
    with(tree, "grid.mesh_2d", [&](const std::string& k, const std::string& v) { cfg.grid_mesh_2d = to_double(k, v); });
    with(tree, "grid.boundary", [&](const std::string& k, const std::string& v) {
        if (v == "reflecting")
            cfg.grid->boundary = grid::Boundary::reflecting;
        else if (v == "absorbing")
            cfg.grid->boundary = grid::Boundary::absorbing;
        else
            throw ConfigError(k + ": expected 'reflecting' or 'absorbing'");
    });
    with(tree, "grid.weak_tests",
         [&](const std::string& k, const std::string& v) { cfg.weak_tests = static_cast<int>(to_long(k, v)); });
    if (!grid_enabled) cfg.grid.reset();

    with(tree, "probe.enabled", [&](const std::string& k, const std::string& v) { cfg.probe.enabled = to_bool(k, v); });
    with(tree, "probe.weights", [&](const std::string&, const std::string& v) { cfg.probe.weights = split_list(v); });
    with(tree, "probe.dims", [&](const std::string& k, const std::string& v) { cfg.probe.dims = int_list(k, v); });
    with(tree, "probe.lambda", [&](const std::string& k, const std::string& v) { cfg.probe.lambda = to_double(k, v); });
    with(tree, "probe.function", [&](const std::string&, const std::string& v) { cfg.probe.function = v; });

    with(tree, "ladder.enabled",
         [&](const std::string& k, const std::string& v) { cfg.ladder.enabled = to_bool(k, v); });
    with(tree, "ladder.weight", [&](const std::string&, const std::string& v) { cfg.ladder.weight = v; });
    with(tree, "ladder.dims", [&](const std::string& k, const std::string& v) { cfg.ladder.dims = int_list(k, v); });
    with(tree, "ladder.lambda",
         [&](const std::string& k, const std::string& v) { cfg.ladder.lambda = to_double(k, v); });
    with(tree, "ladder.function", [&](const std::string&, const std::string& v) { cfg.ladder.function = v; });
    with(tree, "ladder.samples",
         [&](const std::string& k, const std::string& v) { cfg.ladder.samples = to_long(k, v); });

    with(tree, "domain.samples",
         [&](const std::string& k, const std::string& v) { cfg.domain_samples = to_long(k, v); });
    with(tree, "domain.batches",
         [&](const std::string& k, const std::string& v) { cfg.domain_batches = static_cast<int>(to_long(k, v)); });

    // Weight sections carry numeric parameters and an optional dims override.
    for (const auto& id : weight_ids) cfg.weights.push_back(WeightSpec{id, {}, {}});
    for (const auto& [name, section] : tree) {
        if (!known_weight(name)) {
            const bool fixed = name == "experiment" || name == "mc" || name == "grid" || name == "probe" ||
                               name == "ladder" || name == "domain";
            if (!fixed) throw ConfigError("unknown section [" + name + "]");
            continue;
        }
        for (auto& w : cfg.weights) {
            if (w.id != name) continue;
            for (const auto& [k, v] : section) {
                const std::string key = name + "." + k;
                if (k == "dims")
                    w.dims = int_list(key, v.data());
                else
                    w.params[k] = to_double(key, v.data());
            }
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    return parse_config(in);
}

SmoothFn make_function(const std::string& id, int n)
{
    require(n >= 1, "make_function: n must be at least 1");
    if (id == "constant") return fns::constant(1.0);
    if (id == "tanh") return fns::tanh_ridge(Vec::Unit(1, 0));
    if (id == "cos") {
        Vec a(n);
        for (int i = 0; i < n; ++i) a[i] = 1.0 / (i + 1);
        return fns::cos_ridge(a / a.norm());
    }
    if (id == "indicator") return fns::smoothed_indicator(std::min(n, 2));
    if (id == "xi1") return fns::coordinate(0);
    if (id == "hermite2") return fns::hermite(2, 0);
    throw DomainError("make_function: unknown function '" + id + "'");
}

ConvexWeight make_weight(const WeightSpec& spec, int n, std::uint64_t seed)
{
    require(n >= 1, "make_weight: n must be at least 1");
    if (spec.id == "zero") return weights::zero(n);
    if (spec.id == "quadratic") return weights::quadratic(n, spec.param("c", 1.0));
    if (spec.id == "huber") return weights::huber(n, spec.param("delta", 0.5));
    if (spec.id == "energy") {
        const auto modes = static_cast<int>(spec.param("modes", 256));
        require(n <= modes, "make_weight: energy truncation beyond the master modes");
        wiener::EnergyWeight full(modes);
        ConvexWeight w = full.truncation(n);
        w.label = "energy";
        return w;
    }
    if (spec.id == "max_endpoint") {
        const auto modes = static_cast<int>(spec.param("modes", 256));
        const auto grid_points = static_cast<int>(spec.param("grid", 256));
        const auto tails = static_cast<long>(spec.param("tails", 64));
        const double eps_param = spec.param("epsilon", 0.0);
        const double eps = eps_param > 0.0 ? eps_param : 1.0 / n;
        const auto per_axis = static_cast<int>(spec.param("kernel_nodes", 6));
        require(n <= modes, "make_weight: max_endpoint truncation beyond the master modes");
        auto base = std::make_shared<const wiener::MaxEndpointWeight>(modes, grid_points);
        galerkin::McOptions mc;
        mc.samples = tails;
        mc.seed = derive_seed(seed, "max_endpoint/tails");
        galerkin::TruncatedWeight trunc(base, n, mc);
        const galerkin::BumpKernel kernel =
            n <= 3 ? galerkin::BumpKernel::tensor(n, per_axis) : galerkin::BumpKernel::cross(n);
        ConvexWeight w = weights::memoize(galerkin::mollify(trunc, eps, kernel).as_weight());
        w.label = "max_endpoint";
        return w;
    }
    throw DomainError("make_weight: unknown weight '" + spec.id + "'");
}

} // namespace wou::harness
