#include "wou/harness.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace wou;
using namespace wou::harness;

namespace {

ExperimentConfig parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

std::string config_error(const std::string& text)
{
    try {
        parse(text).validate();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(Config, ParsesSectionsAndWeights)
{
    const ExperimentConfig c = parse("[experiment]\n"
                                     "weights = zero, huber\n"
                                     "dims = 1 3\n"
                                     "lambdas = 0.5 2\n"
                                     "functions = tanh xi1\n"
                                     "seed = 42\n"
                                     "[mc]\npaths = 123\ndt = 0.01\n"
                                     "[huber]\ndelta = 0.25\ndims = 2\n");
    c.validate();
    ASSERT_EQ(c.weights.size(), 2u);
    EXPECT_EQ(c.weights[1].id, "huber");
    EXPECT_EQ(c.weights[1].param("delta", 0.5), 0.25);
    EXPECT_EQ(c.dims_for(c.weights[0]), (std::vector<int>{1, 3}));
    EXPECT_EQ(c.dims_for(c.weights[1]), (std::vector<int>{2}));
    EXPECT_EQ(c.lambdas, (std::vector<double>{0.5, 2.0}));
    EXPECT_EQ(c.mc.paths, 123);
    EXPECT_EQ(c.mc.dt, 0.01);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_TRUE(c.grid.has_value());
}

TEST(Config, RejectsBadInput)
{
    EXPECT_NE(config_error("[experiment]\ndims =\nlambdas = 1\n").find("dims nonempty"), std::string::npos);
    EXPECT_NE(config_error("[experiment]\ndims = 1\nlambdas = 1 -1\n").find("lambdas > 0"), std::string::npos);
    EXPECT_NE(config_error("[experiment]\ndims = 1\nlambdas = 1\nfoo = 2\n").find("unknown key"), std::string::npos);
    EXPECT_NE(config_error("[bogus]\nx = 1\n").find("unknown section"), std::string::npos);
    EXPECT_NE(config_error("[experiment]\ndims = 1\nlambdas = 1\nweights = sphere\n").find("unknown weight"),
              std::string::npos);
    EXPECT_NE(config_error("[experiment]\ndims = 1 x\n").find("not an integer"), std::string::npos);
    EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST(Config, RegistryFunctionsAndWeights)
{
    for (const char* id : {"constant", "tanh", "cos", "indicator", "xi1", "hermite2"}) {
        EXPECT_TRUE(known_function(id));
        const SmoothFn f = make_function(id, 3);
        EXPECT_TRUE(std::isfinite(f(Vec::Ones(3))));
    }
    EXPECT_FALSE(known_function("sinc"));
    WeightSpec e{"energy", {{"modes", 32}}, {}};
    const ConvexWeight w = make_weight(e, 2, 1);
    EXPECT_EQ(w.dim, 2);
    EXPECT_TRUE(w.grad_lip.has_value());
    EXPECT_THROW(make_weight(WeightSpec{"nope", {}, {}}, 1, 1), DomainError);
}

TEST(Report, RowPassRule)
{
    const ReportRow ok = make_row("zero", 1, 1.0, "tanh", "L2_ratio", 1.05, 0.02, 1.0, 0.0);
    EXPECT_TRUE(ok.pass);
    EXPECT_NEAR(ok.margin, -0.05, 1e-15);
    EXPECT_FALSE(make_row("zero", 1, 1.0, "tanh", "L2_ratio", 1.07, 0.02, 1.0, 0.0).pass);
    EXPECT_TRUE(make_row("zero", 1, 1.0, "tanh", "L2_ratio", 1.07, 0.02, 1.0, 0.02).pass);
    EXPECT_FALSE(make_row("zero", 1, 1.0, "tanh", "L2_ratio", NAN, 0.0, 1.0, 0.0).pass);
    EXPECT_FALSE(failed_row("zero", 1, 1.0, "tanh", "L2_ratio", 1.0, "boom").pass);
}

TEST(Report, JsonFieldsAndOrder)
{
    EstimateReport rep;
    rep.rows.push_back(make_row("zero", 2, 1.0, "tanh", "grad_ratio", 0.5, 0.01, 1.0, 0.0));
    rep.rows.push_back(make_row("energy", 1, 4.0, "cos", "L2_ratio", 0.1, 0.0, 0.25, 0.0));
    rep.sort();
    std::ostringstream os;
    rep.write_json(os);
    const auto j = nlohmann::ordered_json::parse(os.str());
    ASSERT_TRUE(j.is_array());
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[0]["weight"], "energy");
    std::vector<std::string> keys;
    for (const auto& [k, v] : j[0].items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"weight", "n", "lambda", "function", "quantity", "estimate", "std_error",
                                              "bound", "allowance", "margin", "pass", "note"}));
    std::ostringstream csv;
    rep.write_csv(csv);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
              "weight,n,lambda,function,quantity,estimate,std_error,bound,allowance,margin,pass,note");
    EXPECT_TRUE(rep.all_pass());
}

TEST(WeightedNorm, GaussianMoments)
{
    const WeightedSampling s{40000, 3};
    const MCValue v = weighted_norm(fns::coordinate(0), weights::zero(2), Order::value, s);
    EXPECT_NEAR(v.mean, 1.0, 4 * v.std_error);
    const MCValue g = weighted_norm(fns::coordinate(0), weights::zero(2), Order::gradient, s);
    EXPECT_NEAR(g.mean, 1.0, 1e-12);
    const MCValue h = weighted_norm(fns::hermite(2, 0), weights::zero(1), Order::hessian, s);
    EXPECT_NEAR(h.mean, 2.0, 1e-12);
    // Under e^{-c x^2 / 2} gamma the variance is 1/(1+c).
    const MCValue q = weighted_norm(fns::coordinate(0), weights::quadratic(1, 3.0), Order::value, s);
    EXPECT_NEAR(q.mean, 0.5, 4 * q.std_error);
}

TEST(Domain, LinearFunctionUnderGaussian)
{
    ExperimentConfig c = parse("[experiment]\nkind = domain\nweights = zero\ndims = 1 3\nfunctions = xi1 constant\n"
                               "[domain]\nsamples = 8000\nbatches = 16\n");
    const EstimateReport rep = verify_domain_equivalence(c);
    ASSERT_EQ(rep.rows.size(), 12u);
    for (const auto& r : rep.rows) {
        if (r.function != "xi1") continue;
        if (r.quantity == "dissipativity") EXPECT_NEAR(r.estimate, -1.0, 1e-12);
        else EXPECT_NEAR(r.estimate, 1.0, 4 * r.std_error + 1e-12) << r.quantity;
        EXPECT_TRUE(r.pass) << r.quantity;
    }
}

TEST(Run, ExitCodesAndArtifacts)
{
    const auto dir = std::filesystem::temp_directory_path() / "wou_harness_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "ok.ini");
        f << "[experiment]\nkind = domain\nweights = zero\ndims = 1\nfunctions = tanh\n[domain]\nsamples = 400\n"
             "batches = 4\n";
        std::ofstream g(dir / "bad.ini");
        g << "[experiment]\ndims =\n";
    }
    std::ostringstream out, err;
    RunOverrides ov;
    ov.output_dir = dir / "out";
    ov.quiet = true;
    EXPECT_EQ(run_experiment(dir / "ok.ini", ov, out, err), 0) << err.str();
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "report.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "tables" / "estimates.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / "summary.txt"));
    EXPECT_EQ(run_experiment(dir / "bad.ini", ov, out, err), 2);
    EXPECT_NE(err.str().find("dims nonempty"), std::string::npos);
    std::filesystem::remove_all(dir);
}
