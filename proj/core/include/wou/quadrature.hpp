#pragma once

#include "wou/common.hpp"

#include <vector>

namespace wou {

struct GaussRule {
    Vec nodes;   // on [-1, 1]
    Vec weights;
};

// Gauss-Legendre rule; n in {2,...,10, 12, 16, 20, 24, 32}.
GaussRule gauss_legendre(int n);

// Composite Gauss-Legendre on [a, b] with `panels` panels of `order` nodes.
GaussRule composite_gauss(double a, double b, int panels, int order);

// Quadrature for int_0^{t_max} e^{-lambda t} g(t) dt with nodes on the
// Euler-Maruyama grid t = k*dt. Nodes: t=0 plus geometric spacing on
// [dt, t_max]. Weights integrate e^{-lambda t} times the piecewise quadratic
// interpolant of g exactly.
struct TimeQuadrature {
    std::vector<long> steps; // strictly increasing, steps[0] == 0
    Vec times;
    Vec weights;
    double lambda = 0.0;
    double t_max = 0.0;
    long total_steps = 0;
    // e^{-lambda t_max}/lambda, multiplies sup|g| to bound the truncated tail.
    double tail_factor() const;
};

TimeQuadrature resolvent_quadrature(double lambda, double dt, double t_max, int nodes);

} // namespace wou
