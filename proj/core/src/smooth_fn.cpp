#include "wou/smooth_fn.hpp"

#include <cmath>
#include <utility>

namespace wou {

SmoothFn::SmoothFn(std::string name, int active_dims, ValueFn value, JetFn jet, std::optional<double> sup_norm)
    : name_(std::move(name)), active_dims_(active_dims), value_(std::move(value)), jet_(std::move(jet)),
      sup_norm_(sup_norm)
{
    require(active_dims_ >= 0, "SmoothFn: negative active dimension");
}

double SmoothFn::operator()(VecIn x) const
{
    require(x.size() >= active_dims_, "SmoothFn '" + name_ + "': point has too few coordinates");
    return value_(x);
}

Jet SmoothFn::jet(VecIn x) const
{
    require(x.size() >= active_dims_, "SmoothFn '" + name_ + "': point has too few coordinates");
    return jet_(x);
}

double hermite(int k, double x)
{
    require(k >= 0, "hermite: negative degree");
    if (k == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int j = 1; j < k; ++j) {
        const double next = x * cur - j * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

namespace fns {

namespace {

Jet zero_jet(Eigen::Index n, double value)
{
    return Jet{value, Vec::Zero(n), Mat::Zero(n, n)};
}

double dot_leading(const Vec& a, VecIn x)
{
    return a.dot(x.head(a.size()));
}

} // namespace

SmoothFn constant(double c)
{
    return SmoothFn(
        "constant", 0, [c](VecIn) { return c; }, [c](VecIn x) { return zero_jet(x.size(), c); }, std::abs(c));
}

SmoothFn linear(const Vec& a)
{
    const auto k = static_cast<int>(a.size());
    return SmoothFn(
        "linear", k, [a](VecIn x) { return dot_leading(a, x); },
        [a, k](VecIn x) {
            Jet j = zero_jet(x.size(), dot_leading(a, x));
            j.grad.head(k) = a;
            return j;
        });
}

SmoothFn coordinate(int i)
{
    Vec a = Vec::Zero(i + 1);
    a[i] = 1.0;
    SmoothFn f = linear(a);
    return SmoothFn("xi" + std::to_string(i + 1), i + 1, [f](VecIn x) { return f(x); },
                    [f](VecIn x) { return f.jet(x); });
}

SmoothFn ridge(std::string name, const Vec& a, std::function<double(double)> g, std::function<double(double)> g1,
               std::function<double(double)> g2, std::optional<double> sup_norm)
{
    const auto k = static_cast<int>(a.size());
    auto value = [a, g](VecIn x) { return g(dot_leading(a, x)); };
    auto jet = [a, k, g, g1, g2](VecIn x) {
        const double s = dot_leading(a, x);
        Jet j = zero_jet(x.size(), g(s));
        j.grad.head(k) = g1(s) * a;
        j.hess.topLeftCorner(k, k) = g2(s) * a * a.transpose();
        return j;
    };
    return SmoothFn(std::move(name), k, value, jet, sup_norm);
}

SmoothFn tanh_ridge(const Vec& a)
{
    return ridge(
        "tanh", a, [](double s) { return std::tanh(s); },
        [](double s) {
            const double t = std::tanh(s);
            return 1.0 - t * t;
        },
        [](double s) {
            const double t = std::tanh(s);
            return -2.0 * t * (1.0 - t * t);
        },
        1.0);
}

SmoothFn cos_ridge(const Vec& a)
{
    return ridge(
        "cos", a, [](double s) { return std::cos(s); }, [](double s) { return -std::sin(s); },
        [](double s) { return -std::cos(s); }, 1.0);
}

SmoothFn logistic_ridge(const Vec& a, double shift)
{
    auto sig = [shift](double s) { return 1.0 / (1.0 + std::exp(-(s - shift))); };
    return ridge(
        "logistic", a, sig,
        [sig](double s) {
            const double p = sig(s);
            return p * (1.0 - p);
        },
        [sig](double s) {
            const double p = sig(s);
            return p * (1.0 - p) * (1.0 - 2.0 * p);
        },
        1.0);
}

SmoothFn hermite(int k, int i)
{
    require(k >= 0 && i >= 0, "fns::hermite: bad arguments");
    auto h0 = [k](double x) { return wou::hermite(k, x); };
    // He_k' = k He_{k-1}, He_k'' = k(k-1) He_{k-2}
    auto h1 = [k](double x) { return k >= 1 ? k * wou::hermite(k - 1, x) : 0.0; };
    auto h2 = [k](double x) { return k >= 2 ? k * (k - 1) * wou::hermite(k - 2, x) : 0.0; };
    return SmoothFn(
        "H" + std::to_string(k), i + 1, [h0, i](VecIn x) { return h0(x[i]); },
        [h0, h1, h2, i](VecIn x) {
            Jet j = zero_jet(x.size(), h0(x[i]));
            j.grad[i] = h1(x[i]);
            j.hess(i, i) = h2(x[i]);
            return j;
        },
        k == 0 ? std::optional<double>(1.0) : std::nullopt);
}

SmoothFn smoothed_indicator(int k, double radius, double width)
{
    require(k >= 1 && radius > 0.0 && width > 0.0, "smoothed_indicator: bad arguments");
    const double r2 = radius * radius;
    auto sig = [r2, width](double s) { return 1.0 / (1.0 + std::exp((s - r2) / width)); };
    return SmoothFn(
        "indicator", k, [sig, k](VecIn x) { return sig(x.head(k).squaredNorm()); },
        [sig, k, width](VecIn x) {
            const auto xs = x.head(k);
            const double p = sig(xs.squaredNorm());
            const double d1 = -p * (1.0 - p) / width;
            const double d2 = p * (1.0 - p) * (1.0 - 2.0 * p) / (width * width);
            Jet j = zero_jet(x.size(), p);
            j.grad.head(k) = 2.0 * d1 * xs;
            j.hess.topLeftCorner(k, k) = 4.0 * d2 * xs * xs.transpose() + 2.0 * d1 * Mat::Identity(k, k);
            return j;
        },
        1.0);
}

} // namespace fns

} // namespace wou
