#pragma once

#include "wou/common.hpp"

#include <functional>
#include <optional>
#include <string>

namespace wou {

// Convex potential on R^dim given by value and subgradient oracles.
struct ConvexWeight {
    using ValueFn = std::function<double(VecIn)>;
    using SubgradFn = std::function<void(VecIn, VecOut)>;
    // Optional combined oracle for weights where value and gradient share work.
    using FusedFn = std::function<double(VecIn, VecOut)>;

    int dim = 0;
    ValueFn eval;
    SubgradFn subgrad;
    std::optional<double> grad_lip;
    std::string label;
    FusedFn fused;

    double value(VecIn x) const;
    Vec gradient(VecIn x) const;
    void gradient(VecIn x, VecOut g) const;
    double value_and_gradient(VecIn x, VecOut g) const;
    bool smooth() const noexcept { return grad_lip.has_value(); }
};

namespace weights {

ConvexWeight zero(int n);
ConvexWeight constant(int n, double c);
// <a, x> + b
ConvexWeight affine(const Vec& a, double b = 0.0);
// (c/2)|x|^2
ConvexWeight quadratic(int n, double c = 1.0);
// (1/2) sum d_i x_i^2 + const, d_i >= 0
ConvexWeight diag_quadratic(const Vec& d, double constant = 0.0);
// sum |x_i|; subgradient 0 at a kink.
ConvexWeight l1(int n);
// sum of Huber functions with threshold delta.
ConvexWeight huber(int n, double delta);
// max_j <a_j, x> + b_j over the rows of A; first maximizing row wins ties.
ConvexWeight max_affine(const Mat& A, const Vec& b);
// log sum_j exp(<a_j, x> + b_j)
ConvexWeight log_sum_exp(const Mat& A, const Vec& b);

// Extends a weight on the first base.dim coordinates to n >= base.dim coordinates.
ConvexWeight embed(const ConvexWeight& base, int n);

// Thread-safe memoization of value and gradient keyed on the exact point.
ConvexWeight memoize(const ConvexWeight& base);

} // namespace weights

struct WeightAudit {
    double convexity_slack = 0.0;   // min over samples of theta f(x)+(1-theta) f(y) - f(theta x + (1-theta) y)
    double subgradient_slack = 0.0; // min of f(y) - f(x) - <g(x), y - x>
    double lipschitz_excess = 0.0;  // max of |g(x)-g(y)| - L|x-y| (0 when no constant is declared)
    double lipschitz_empirical = 0.0;
};

// Checks the convexity, subgradient and gradient-Lipschitz invariants on random pairs.
WeightAudit audit_weight(const ConvexWeight& w, int samples, std::uint64_t seed, double radius = 3.0);

} // namespace wou
