#pragma once

#include "wou/weight.hpp"

#include <vector>

namespace wou::prox {

struct Options {
    double tol = 1e-8;
    long max_iter = 100000;
};

struct ProxResult {
    Vec minimizer; // h* = P(x, alpha)
    double envelope = 0.0;
    Vec gradient;  // -h*/alpha
    long iterations = 0;
    double residual = 0.0;
};

// Minimizes h -> w(x+h) + |h|^2/(2 alpha).
//
// With a gradient-Lipschitz constant this runs gradient descent and the
// residual is |grad|. Otherwise a proximal bundle method runs and the residual
// is sqrt(2 gap / alpha), where gap is a certified duality gap, so that
// |h - h*| <= alpha * residual in both cases.
ProxResult prox_point(const ConvexWeight& w, VecIn x, double alpha, const Options& opt = {});

double moreau_envelope(const ConvexWeight& w, VecIn x, double alpha, const Options& opt = {});
Vec envelope_gradient(const ConvexWeight& w, VecIn x, double alpha, const Options& opt = {});

// min over probes h of f(x+h) + <p, h-p>/alpha - f(x+p) for the candidate p.
double check_optimality(const ConvexWeight& w, VecIn x, double alpha, VecIn candidate, const std::vector<Vec>& probes);

struct AffineMinorant {
    Vec slope;
    double intercept = 0.0;
    Vec anchor;
    double operator()(VecIn x) const { return slope.dot(x - anchor) + intercept; }
};

// Tangent x -> <g(x0), x - x0> + f(x0).
AffineMinorant affine_minorant(const ConvexWeight& w, VecIn x0);

// The envelope f_alpha as a smooth weight with gradient-Lipschitz constant 1/alpha.
ConvexWeight moreau_weight(const ConvexWeight& w, double alpha, const Options& opt = {});

// Central-difference Jacobian of a vector field, e.g. the Hessian of f_alpha
// from envelope_gradient.
Mat fd_jacobian(const std::function<Vec(VecIn)>& field, VecIn x, double step = 1e-5);

} // namespace wou::prox
