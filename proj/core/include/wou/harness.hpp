#pragma once

#include "wou/grid.hpp"
#include "wou/semigroup.hpp"
#include "wou/smooth_fn.hpp"
#include "wou/weight.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wou::harness {

class ConfigError : public DomainError {
public:
    using DomainError::DomainError;
};

enum class ExperimentKind { estimates, domain };

// A registered weight family with its numeric parameters.
//   zero
//   quadratic      c (default 1)
//   huber          delta (default 0.5)
//   energy         modes (256)
//   max_endpoint   modes (256), grid (256), tails (64), epsilon (0 selects 1/n), kernel_nodes (6)
struct WeightSpec {
    std::string id;
    std::map<std::string, double> params;
    std::vector<int> dims; // empty: use ExperimentConfig::dims

    double param(const std::string& key, double fallback) const;
};

struct ProbeConfig {
    bool enabled = false;
    std::vector<std::string> weights{"zero", "energy"};
    std::vector<int> dims{1, 2, 4, 8};
    double lambda = 1.0;
    std::string function = "tanh";
};

struct LadderConfig {
    bool enabled = false;
    std::string weight = "max_endpoint";
    std::vector<int> dims{1, 2, 4, 8};
    double lambda = 1.0;
    std::string function = "tanh";
    long samples = 4000;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::estimates;
    std::vector<WeightSpec> weights;
    std::vector<int> dims;
    std::vector<double> lambdas;
    std::vector<std::string> test_functions;
    mc::DiffusionConfig mc;
    long outer_samples = 96;
    double fd_step = 5e-2;
    bool richardson = true;
    // Grid oracle for n <= grid_max_dim; absent disables it.
    std::optional<grid::GridSpec> grid;
    double grid_mesh_2d = 0.125;
    int grid_max_dim = 2;
    int weak_tests = 10;
    long domain_samples = 20000;
    int domain_batches = 32;
    ProbeConfig probe;
    LadderConfig ladder;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 1;

    // Throws ConfigError naming the violated invariant.
    void validate() const;
    std::vector<int> dims_for(const WeightSpec& w) const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

// Registered test functions on R^n: constant, tanh, cos, indicator, xi1, hermite2.
SmoothFn make_function(const std::string& id, int n);
bool known_function(const std::string& id);

// The weight used for dimension n, memoized.
ConvexWeight make_weight(const WeightSpec& spec, int n, std::uint64_t seed);
bool known_weight(const std::string& id);

struct ReportRow {
    std::string weight;
    int n = 0;
    double lambda = 0.0;
    std::string function;
    std::string quantity;
    double estimate = 0.0;
    double std_error = 0.0;
    double bound = 0.0;
    double allowance = 0.0;
    double margin = 0.0;
    bool pass = false;
    std::string note;

    // Sort key: weight, n, lambda, function, quantity.
    bool operator<(const ReportRow& o) const;
};

// margin = bound - estimate; pass iff estimate <= bound + 3 std_error + allowance.
ReportRow make_row(std::string weight, int n, double lambda, std::string function, std::string quantity,
                   double estimate, double std_error, double bound, double allowance, std::string note = {});
ReportRow failed_row(std::string weight, int n, double lambda, std::string function, std::string quantity,
                     double bound, const std::string& error);

// Least-squares slope of a ratio against n with the standard error implied by the row errors.
struct SlopeRow {
    std::string weight;
    std::string quantity;
    double slope = 0.0;
    double std_error = 0.0;
    bool pass = false; // |slope| <= 2 std_error
};

struct LadderRow {
    std::string weight;
    int n = 0;
    double correction = 0.0; // sqrt of int |grad U - grad psi_n|^2 dnu
    double correction_se = 0.0;
    std::optional<double> residual; // |lambda V_n - L_nu V_n - f| in L2(nu), grid dims only
    std::optional<double> residual_se;
};

struct EstimateReport {
    std::vector<ReportRow> rows;
    std::vector<SlopeRow> slopes;
    std::vector<LadderRow> ladder;

    void sort();
    bool all_pass() const;
    std::vector<const ReportRow*> failures() const;

    void write_json(std::ostream& os) const; // array of rows
    void write_csv(std::ostream& os) const;
    void write_slopes_csv(std::ostream& os) const;
    void write_slopes_json(std::ostream& os) const;
    void write_ladder_csv(std::ostream& os) const;
    void write_summary(std::ostream& os) const;
};

enum class Order { value = 0, gradient = 1, hessian = 2 };

struct WeightedSampling {
    long samples = 20000;
    std::uint64_t seed = 1;
};

// ||g||, ||grad g|| or the Hilbert-Schmidt norm of the Hessian in L2 under the
// normalized e^{-phi} gamma_n, by self-normalized importance sampling from gamma_n.
MCValue weighted_norm(const SmoothFn& g, const ConvexWeight& w, Order order, const WeightedSampling& s);

using Progress = std::function<void(const std::string&)>;

EstimateReport verify_main_estimates(const ExperimentConfig& cfg, const Progress& progress = {});
EstimateReport verify_domain_equivalence(const ExperimentConfig& cfg, const Progress& progress = {});

// Writes report.json, slopes.json, tables/*.csv and summary.txt under dir.
void write_artifacts(const EstimateReport& report, const std::filesystem::path& dir);

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output_dir;
    std::optional<long> paths;
    std::optional<ExperimentKind> kind;
    bool quiet = false;
};

// 0 when every row and slope passes, 1 on failing rows or numerical errors,
// 2 on configuration errors. Messages go to err.
int run_experiment(const std::filesystem::path& config, const RunOverrides& overrides, std::ostream& out,
                   std::ostream& err);

} // namespace wou::harness
