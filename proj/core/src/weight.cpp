#include "wou/weight.hpp"

#include "wou/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <vector>

namespace wou {

double ConvexWeight::value(VecIn x) const
{
    const double v = eval(x);
    require_finite(v, label.c_str());
    return v;
}

Vec ConvexWeight::gradient(VecIn x) const
{
    Vec g(dim);
    gradient(x, g);
    return g;
}

void ConvexWeight::gradient(VecIn x, VecOut g) const
{
    subgrad(x, g);
}

double ConvexWeight::value_and_gradient(VecIn x, VecOut g) const
{
    if (fused) return fused(x, g);
    subgrad(x, g);
    return eval(x);
}

namespace weights {

ConvexWeight zero(int n)
{
    return constant(n, 0.0);
}

ConvexWeight constant(int n, double c)
{
    require(n >= 1, "weight dimension must be positive");
    ConvexWeight w;
    w.dim = n;
    w.eval = [c](VecIn) { return c; };
    w.subgrad = [](VecIn, VecOut g) { g.setZero(); };
    w.grad_lip = 0.0;
    w.label = c == 0.0 ? "zero" : "constant";
    return w;
}

ConvexWeight affine(const Vec& a, double b)
{
    require(a.size() >= 1, "affine weight needs a nonempty slope");
    ConvexWeight w;
    w.dim = static_cast<int>(a.size());
    w.eval = [a, b](VecIn x) { return a.dot(x) + b; };
    w.subgrad = [a](VecIn, VecOut g) { g = a; };
    w.grad_lip = 0.0;
    w.label = "affine";
    return w;
}

ConvexWeight quadratic(int n, double c)
{
    require(c >= 0.0, "quadratic weight needs c >= 0");
    ConvexWeight w = diag_quadratic(Vec::Constant(n, c));
    w.label = "quadratic";
    return w;
}

ConvexWeight diag_quadratic(const Vec& d, double constant)
{
    require(d.size() >= 1, "diag_quadratic: empty diagonal");
    require((d.array() >= 0.0).all(), "diag_quadratic: negative curvature");
    ConvexWeight w;
    w.dim = static_cast<int>(d.size());
    w.eval = [d, constant](VecIn x) { return 0.5 * (d.array() * x.array().square()).sum() + constant; };
    w.subgrad = [d](VecIn x, VecOut g) { g = d.cwiseProduct(x); };
    w.grad_lip = d.maxCoeff();
    w.label = "diag_quadratic";
    return w;
}

ConvexWeight l1(int n)
{
    require(n >= 1, "weight dimension must be positive");
    ConvexWeight w;
    w.dim = n;
    w.eval = [](VecIn x) { return x.cwiseAbs().sum(); };
    w.subgrad = [](VecIn x, VecOut g) {
        for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
    };
    w.label = "l1";
    return w;
}

ConvexWeight huber(int n, double delta)
{
    require(n >= 1 && delta > 0.0, "huber: bad arguments");
    ConvexWeight w;
    w.dim = n;
    w.eval = [delta](VecIn x) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double a = std::abs(x[i]);
            s += a <= delta ? 0.5 * a * a / delta : a - 0.5 * delta;
        }
        return s;
    };
    w.subgrad = [delta](VecIn x, VecOut g) {
        for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = std::clamp(x[i] / delta, -1.0, 1.0);
    };
    w.grad_lip = 1.0 / delta;
    w.label = "huber";
    return w;
}

ConvexWeight max_affine(const Mat& A, const Vec& b)
{
    require(A.rows() >= 1 && A.rows() == b.size(), "max_affine: shape mismatch");
    ConvexWeight w;
    w.dim = static_cast<int>(A.cols());
    auto argmax = [A, b](VecIn x, double& best) {
        Eigen::Index k = 0;
        best = -INFINITY;
        for (Eigen::Index j = 0; j < A.rows(); ++j) {
            const double v = A.row(j).dot(x) + b[j];
            if (v > best) {
                best = v;
                k = j;
            }
        }
        return k;
    };
    w.eval = [argmax](VecIn x) {
        double best;
        argmax(x, best);
        return best;
    };
    w.subgrad = [A, argmax](VecIn x, VecOut g) {
        double best;
        g = A.row(argmax(x, best)).transpose();
    };
    w.label = "max_affine";
    return w;
}

ConvexWeight log_sum_exp(const Mat& A, const Vec& b)
{
    require(A.rows() >= 1 && A.rows() == b.size(), "log_sum_exp: shape mismatch");
    ConvexWeight w;
    w.dim = static_cast<int>(A.cols());
    auto fused = [A, b](VecIn x, VecOut g) {
        Vec z = A * x + b;
        const double m = z.maxCoeff();
        Vec p = (z.array() - m).exp();
        const double s = p.sum();
        p /= s;
        g = A.transpose() * p;
        return m + std::log(s);
    };
    w.eval = [A, b](VecIn x) {
        Vec z = A * x + b;
        const double m = z.maxCoeff();
        return m + std::log((z.array() - m).exp().sum());
    };
    w.subgrad = [fused](VecIn x, VecOut g) { fused(x, g); };
    w.fused = fused;
    // Hessian is A^T (diag p - p p^T) A, bounded by max_j |a_j|^2.
    w.grad_lip = A.rowwise().squaredNorm().maxCoeff();
    w.label = "log_sum_exp";
    return w;
}

ConvexWeight embed(const ConvexWeight& base, int n)
{
    require(n >= base.dim, "embed: target dimension smaller than the base");
    if (n == base.dim) return base;
    ConvexWeight w = base;
    const int k = base.dim;
    w.dim = n;
    w.eval = [base, k](VecIn x) { return base.eval(x.head(k)); };
    w.subgrad = [base, k](VecIn x, VecOut g) {
        g.setZero();
        Vec gk(k);
        base.subgrad(x.head(k), gk);
        g.head(k) = gk;
    };
    if (base.fused) {
        w.fused = [base, k](VecIn x, VecOut g) {
            g.setZero();
            Vec gk(k);
            const double v = base.fused(x.head(k), gk);
            g.head(k) = gk;
            return v;
        };
    }
    return w;
}

namespace {

struct MemoTable {
    struct Entry {
        double value;
        Vec grad;
    };
    std::shared_mutex mutex;
    std::map<std::vector<double>, Entry> entries;
};

} // namespace

ConvexWeight memoize(const ConvexWeight& base)
{
    auto table = std::make_shared<MemoTable>();
    auto lookup = [base, table](VecIn x, VecOut g) {
        std::vector<double> key(x.data(), x.data() + x.size());
        {
            std::shared_lock lock(table->mutex);
            auto it = table->entries.find(key);
            if (it != table->entries.end()) {
                g = it->second.grad;
                return it->second.value;
            }
        }
        Vec grad(base.dim);
        const double v = base.value_and_gradient(x, grad);
        std::unique_lock lock(table->mutex);
        table->entries.emplace(std::move(key), MemoTable::Entry{v, grad});
        g = grad;
        return v;
    };
    ConvexWeight w = base;
    w.fused = lookup;
    const int n = base.dim;
    w.eval = [lookup, n](VecIn x) {
        Vec g(n);
        return lookup(x, g);
    };
    w.subgrad = [lookup](VecIn x, VecOut g) { lookup(x, g); };
    return w;
}

} // namespace weights

WeightAudit audit_weight(const ConvexWeight& w, int samples, std::uint64_t seed, double radius)
{
    WeightAudit out;
    NormalStream rng(seed, 0x5eed);
    const int n = w.dim;
    Vec x(n), y(n), gx(n), gy(n);
    out.convexity_slack = INFINITY;
    out.subgradient_slack = INFINITY;
    out.lipschitz_excess = -INFINITY;
    for (int s = 0; s < samples; ++s) {
        for (int i = 0; i < n; ++i) {
            x[i] = radius * (2.0 * rng.uniform() - 1.0);
            y[i] = radius * (2.0 * rng.uniform() - 1.0);
        }
        const double theta = rng.uniform();
        const double fx = w.value_and_gradient(x, gx);
        const double fy = w.value_and_gradient(y, gy);
        const Vec z = theta * x + (1.0 - theta) * y;
        out.convexity_slack = std::min(out.convexity_slack, theta * fx + (1.0 - theta) * fy - w.value(z));
        out.subgradient_slack = std::min(out.subgradient_slack, fy - fx - gx.dot(y - x));
        const double dist = (x - y).norm();
        const double dg = (gx - gy).norm();
        if (dist > 0.0) out.lipschitz_empirical = std::max(out.lipschitz_empirical, dg / dist);
        if (w.grad_lip) out.lipschitz_excess = std::max(out.lipschitz_excess, dg - *w.grad_lip * dist);
    }
    if (!w.grad_lip) out.lipschitz_excess = 0.0;
    return out;
}

} // namespace wou
