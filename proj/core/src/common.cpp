#include "wou/common.hpp"

#include <cmath>

namespace wou {

MCValue summarize(std::span<const double> samples)
{
    MCValue out;
    const auto n = static_cast<long>(samples.size());
    out.paths_used = n;
    if (n == 0) return out;
    const double shift = samples[0];
    double s = 0.0;
    for (double x : samples) s += x - shift;
    const double mean_shifted = s / static_cast<double>(n);
    out.mean = shift + mean_shifted;
    if (n < 2) return out;
    double ss = 0.0;
    for (double x : samples) {
        const double d = (x - shift) - mean_shifted;
        ss += d * d;
    }
    out.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    return out;
}

MCValue weighted_mean(std::span<const double> weights, std::span<const double> values)
{
    require(weights.size() == values.size(), "weighted_mean: size mismatch");
    MCValue out;
    const auto n = static_cast<long>(values.size());
    out.paths_used = n;
    if (n == 0) return out;
    const double shift = values[0];
    double sw = 0.0, swx = 0.0;
    for (long i = 0; i < n; ++i) {
        sw += weights[i];
        swx += weights[i] * (values[i] - shift);
    }
    if (!(sw > 0.0)) throw NumericalError("weighted_mean: total weight is not positive");
    out.mean = shift + swx / sw;
    // Delta method for a ratio estimator: var ~ sum w_i^2 (x_i - mean)^2 / (sum w)^2.
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
        const double d = weights[i] * (values[i] - out.mean);
        acc += d * d;
    }
    out.std_error = n > 1 ? std::sqrt(acc * static_cast<double>(n) / static_cast<double>(n - 1)) / sw : 0.0;
    return out;
}

void require_finite(VecIn v, const char* what)
{
    if (!v.allFinite()) throw NumericalError(std::string("non-finite value in ") + what);
}

void require_finite(double v, const char* what)
{
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite value in ") + what);
}

} // namespace wou
