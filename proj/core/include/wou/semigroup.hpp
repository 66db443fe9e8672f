#pragma once

#include "wou/quadrature.hpp"
#include "wou/smooth_fn.hpp"
#include "wou/weight.hpp"

#include <span>
#include <vector>

namespace wou::mc {

struct DiffusionConfig {
    double dt = 1e-3;
    long paths = 10000;
    std::uint64_t seed = 0x5eedULL;
    // Resolvent truncation horizon; 0 selects max(8/lambda, 8).
    double t_max = 0.0;
    int quad_nodes = 64;

    void validate() const;
    double horizon(double lambda) const;
};

// Euler-Maruyama for dX = -(grad phi(X) + X) dt + sqrt(2) dW, ceil(t/dt) steps.
// Path p draws its noise from stream p of the seed, so the result does not
// depend on the number of threads. Returns one terminal point per column.
Mat simulate_terminal(const ConvexWeight& w, VecIn xi0, double t, const DiffusionConfig& cfg);

MCValue semigroup_apply(const ConvexWeight& w, const SmoothFn& f, double t, VecIn xi, const DiffusionConfig& cfg);

// Central differences with common random numbers. bias_bound holds the
// Richardson estimate |D(h) - D(2h)|/3 of the truncation error.
std::vector<MCValue> semigroup_gradient(const ConvexWeight& w, const SmoothFn& f, double t, VecIn xi,
                                        const DiffusionConfig& cfg, double fd_step = 1e-2);

// int_0^T e^{-lambda t} T_t f(xi) dt by product quadrature along each path.
// bias_bound holds the truncated tail sup|f| e^{-lambda T}/lambda.
MCValue resolvent_apply(const ConvexWeight& w, const SmoothFn& f, double lambda, VecIn xi,
                        const DiffusionConfig& cfg);

struct ResolventDerivatives {
    int dim = 0;
    MCValue value;
    std::vector<MCValue> gradient;
    std::vector<MCValue> hessian; // row-major dim x dim

    const MCValue& hess(int i, int j) const { return hessian[static_cast<std::size_t>(i) * dim + j]; }
    Vec gradient_mean() const;
    Mat hessian_mean() const;
};

// First and second central differences of the resolvent with common random
// numbers. Off-diagonal entries use the points xi +- step (e_i + e_j). With
// richardson the step-2h stencil is added, means are extrapolated and
// bias_bound carries |D(h) - D(2h)|/3; without it bias_bound is zero.
ResolventDerivatives resolvent_derivatives(const ConvexWeight& w, const SmoothFn& f, double lambda, VecIn xi,
                                           const DiffusionConfig& cfg, double fd_step = 1e-2, bool richardson = false);

// Same as above for several data functions sharing the simulated paths.
std::vector<ResolventDerivatives> resolvent_derivatives(const ConvexWeight& w, std::span<const SmoothFn> fs,
                                                        double lambda, VecIn xi, const DiffusionConfig& cfg,
                                                        double fd_step, bool richardson);

enum class MehlerKind { linear, cosine, hermite };

struct MehlerSpec {
    MehlerKind kind = MehlerKind::linear;
    Vec a;     // linear and cosine
    int k = 0; // hermite degree (first coordinate)
};

// Exact standard OU semigroup (phi = 0); t may be +infinity.
double mehler_oracle(const MehlerSpec& spec, double t, VecIn xi);

} // namespace wou::mc
