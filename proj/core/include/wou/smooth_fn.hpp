#pragma once

#include "wou/common.hpp"

#include <functional>
#include <optional>
#include <string>

namespace wou {

// Value, gradient and Hessian at one point.
struct Jet {
    double value = 0.0;
    Vec grad;
    Mat hess;
};

// A smooth scalar function of the leading coordinates of a point.
// Evaluation accepts points of any dimension >= active_dims(); derivatives
// are returned in the dimension of the point (zero in inactive directions).
class SmoothFn {
public:
    using ValueFn = std::function<double(VecIn)>;
    using JetFn = std::function<Jet(VecIn)>;

    SmoothFn() = default;
    SmoothFn(std::string name, int active_dims, ValueFn value, JetFn jet, std::optional<double> sup_norm = {});

    double operator()(VecIn x) const;
    Jet jet(VecIn x) const;

    const std::string& name() const noexcept { return name_; }
    int active_dims() const noexcept { return active_dims_; }
    std::optional<double> sup_norm() const noexcept { return sup_norm_; }
    bool bounded() const noexcept { return sup_norm_.has_value(); }

private:
    std::string name_;
    int active_dims_ = 0;
    ValueFn value_;
    JetFn jet_;
    std::optional<double> sup_norm_;
};

// Probabilists' Hermite polynomial He_k and its first two derivatives.
double hermite(int k, double x);

namespace fns {

SmoothFn constant(double c);
// <a, xi>
SmoothFn linear(const Vec& a);
SmoothFn coordinate(int i);
// g(<a, xi>) for a scalar profile g with derivatives g1, g2.
SmoothFn ridge(std::string name, const Vec& a, std::function<double(double)> g, std::function<double(double)> g1,
               std::function<double(double)> g2, std::optional<double> sup_norm);
SmoothFn tanh_ridge(const Vec& a);
SmoothFn cos_ridge(const Vec& a);
// 1 / (1 + exp(-(<a, xi> - shift))), positive and bounded by 1.
SmoothFn logistic_ridge(const Vec& a, double shift = 0.0);
// He_k of coordinate i.
SmoothFn hermite(int k, int i = 0);
// Smoothed indicator of the ball |xi_{<k}| <= radius: 1/(1+exp((|xi|^2-r^2)/width)).
SmoothFn smoothed_indicator(int k, double radius = 1.0, double width = 0.25);

} // namespace fns

} // namespace wou
