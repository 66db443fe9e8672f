#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace wou {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecIn = Eigen::Ref<const Eigen::VectorXd>;
using VecOut = Eigen::Ref<Eigen::VectorXd>;

// Bad arguments: nonpositive step sizes, empty lists, mismatched dimensions.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An iterative solver ran out of budget.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_residual, long iterations)
        : std::runtime_error(what), last_residual_(last_residual), iterations_(iterations) {}
    double last_residual() const noexcept { return last_residual_; }
    long iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    long iterations_;
};

// Non-finite oracle output or a failed linear solve.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MCValue {
    double mean = 0.0;
    double std_error = 0.0;
    long paths_used = 0;
    // Deterministic error budget (quadrature tail, discretization), kept apart from std_error.
    double bias_bound = 0.0;
};

// Sample mean and standard error (sample sd / sqrt(N)).
// Uses shifted sums so constant samples give exactly zero error.
MCValue summarize(std::span<const double> samples);

// Self-normalized weighted mean sum(w*x)/sum(w) with delta-method standard error.
MCValue weighted_mean(std::span<const double> weights, std::span<const double> values);

inline void require(bool cond, const std::string& msg)
{
    if (!cond) throw DomainError(msg);
}

void require_finite(VecIn v, const char* what);
void require_finite(double v, const char* what);

} // namespace wou
