#include "wou/galerkin.hpp"

#include "wou/grid.hpp"
#include "wou/quadrature.hpp"
#include "wou/rng.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>

namespace wou::galerkin {

namespace {

class DefaultSampler final : public TailSampler {
public:
    DefaultSampler(const CylindricalBase* base, int n, Mat tails) : base_(base), n_(n), tails_(std::move(tails)) {}

    long samples() const override { return tails_.cols(); }

    void evaluate(VecIn xi, Eigen::Ref<Vec> values, Eigen::Ref<Mat> grads) const override
    {
        const int m = base_->modes();
        const Eigen::Index M = tails_.cols();
#pragma omp parallel
        {
            Vec x(m), g(m);
#pragma omp for schedule(static)
            for (Eigen::Index j = 0; j < M; ++j) {
                x.head(n_) = xi;
                x.tail(m - n_) = tails_.col(j);
                values[j] = base_->value_and_gradient(x, g);
                grads.col(j) = g.head(n_);
            }
        }
    }

private:
    const CylindricalBase* base_;
    int n_;
    Mat tails_;
};

class WeightBase final : public CylindricalBase {
public:
    explicit WeightBase(ConvexWeight w) : w_(std::move(w)) {}
    int modes() const override { return w_.dim; }
    std::string label() const override { return w_.label; }
    double value_and_gradient(VecIn x, VecOut g) const override { return w_.value_and_gradient(x, g); }
    std::optional<double> grad_lip() const override { return w_.grad_lip; }

private:
    ConvexWeight w_;
};

} // namespace

std::unique_ptr<TailSampler> CylindricalBase::freeze(int n, Mat tails) const
{
    return std::make_unique<DefaultSampler>(this, n, std::move(tails));
}

double CylindricalBase::value(VecIn x) const
{
    Vec g(modes());
    return value_and_gradient(x, g);
}

Vec CylindricalBase::gradient(VecIn x) const
{
    Vec g(modes());
    value_and_gradient(x, g);
    return g;
}

ConvexWeight CylindricalBase::as_weight() const
{
    auto self = shared_from_this();
    ConvexWeight w;
    w.dim = modes();
    w.eval = [self](VecIn x) { return self->value(x); };
    w.subgrad = [self](VecIn x, VecOut g) { self->value_and_gradient(x, g); };
    w.fused = [self](VecIn x, VecOut g) { return self->value_and_gradient(x, g); };
    w.grad_lip = grad_lip();
    w.label = label();
    return w;
}

std::shared_ptr<const CylindricalBase> cylindrical(ConvexWeight w)
{
    return std::make_shared<WeightBase>(std::move(w));
}

struct TruncatedWeight::Memo {
    std::shared_mutex mutex;
    std::map<std::vector<double>, Entry> entries;
};

TruncatedWeight::TruncatedWeight(std::shared_ptr<const CylindricalBase> base, int n, McOptions mc)
    : base_(std::move(base)), n_(n), mc_(mc)
{
    require(base_ != nullptr, "TruncatedWeight: missing base weight");
    const int m = base_->modes();
    require(n >= 1 && n <= m, "TruncatedWeight: need 1 <= n <= base dimension");
    require(mc_.samples >= 1, "TruncatedWeight: need at least one sample");
    if (n < m) {
        Mat tails(m - n, mc_.samples);
        for (long j = 0; j < mc_.samples; ++j) {
            NormalStream rng(mc_.seed, static_cast<std::uint64_t>(j));
            for (int i = 0; i < m - n; ++i) tails(i, j) = rng.next();
        }
        sampler_ = base_->freeze(n, std::move(tails));
    }
    if (mc_.memoize) memo_ = std::make_shared<Memo>();
}

TruncatedWeight::Entry TruncatedWeight::compute(VecIn xi) const
{
    require(xi.size() == n_, "TruncatedWeight: point dimension mismatch");
    Entry e;
    e.grad.resize(n_);
    if (!sampler_) {
        Vec g(n_);
        e.value.mean = base_->value_and_gradient(xi, g) + base_->tail_remainder();
        e.value.paths_used = 1;
        for (int i = 0; i < n_; ++i) e.grad[i] = MCValue{g[i], 0.0, 1, 0.0};
    } else {
        const long M = sampler_->samples();
        Vec values(M);
        Mat grads(n_, M);
        sampler_->evaluate(xi, values, grads);
        require_finite(values, "conditional expectation integrand");
        e.value = summarize(std::span<const double>(values.data(), M));
        e.value.mean += base_->tail_remainder();
        std::vector<double> row(M);
        for (int i = 0; i < n_; ++i) {
            for (long j = 0; j < M; ++j) row[j] = grads(i, j);
            e.grad[i] = summarize(row);
        }
    }
    return e;
}

TruncatedWeight::Entry TruncatedWeight::lookup(VecIn xi) const
{
    if (!memo_) return compute(xi);
    std::vector<double> key(xi.data(), xi.data() + xi.size());
    {
        std::shared_lock lock(memo_->mutex);
        auto it = memo_->entries.find(key);
        if (it != memo_->entries.end()) return it->second;
    }
    Entry e = compute(xi);
    std::unique_lock lock(memo_->mutex);
    memo_->entries.emplace(std::move(key), e);
    return e;
}

MCValue TruncatedWeight::value(VecIn xi) const
{
    return lookup(xi).value;
}

std::vector<MCValue> TruncatedWeight::gradient(VecIn xi) const
{
    return lookup(xi).grad;
}

double TruncatedWeight::value_and_gradient(VecIn xi, VecOut g) const
{
    const Entry e = lookup(xi);
    for (int i = 0; i < n_; ++i) g[i] = e.grad[i].mean;
    return e.value.mean;
}

ConvexWeight TruncatedWeight::as_weight() const
{
    ConvexWeight w;
    w.dim = n_;
    auto self = std::make_shared<TruncatedWeight>(*this);
    w.eval = [self](VecIn x) { return self->value(x).mean; };
    w.subgrad = [self](VecIn x, VecOut g) { self->value_and_gradient(x, g); };
    w.fused = [self](VecIn x, VecOut g) { return self->value_and_gradient(x, g); };
    w.grad_lip = base_->grad_lip();
    w.label = "psi" + std::to_string(n_) + "_" + base_->label();
    return w;
}

MCValue conditional_expectation(std::shared_ptr<const CylindricalBase> base, int n, VecIn xi, const McOptions& mc)
{
    McOptions opt = mc;
    opt.memoize = false;
    return TruncatedWeight(std::move(base), n, opt).value(xi);
}

std::vector<MCValue> psi_gradient(std::shared_ptr<const CylindricalBase> base, int n, VecIn xi, const McOptions& mc)
{
    McOptions opt = mc;
    opt.memoize = false;
    return TruncatedWeight(std::move(base), n, opt).gradient(xi);
}

BumpKernel BumpKernel::tensor(int n, int per_axis)
{
    require(n >= 1 && n <= 6, "BumpKernel::tensor: dimension must be in 1..6");
    const GaussRule gl = gauss_legendre(per_axis);
    long total = 1;
    for (int i = 0; i < n; ++i) total *= per_axis;
    std::vector<Vec> pts;
    std::vector<double> ws;
    std::vector<int> idx(n, 0);
    Vec eta(n);
    for (long c = 0; c < total; ++c) {
        long r = c;
        double w = 1.0;
        for (int i = 0; i < n; ++i) {
            idx[i] = static_cast<int>(r % per_axis);
            r /= per_axis;
            eta[i] = gl.nodes[idx[i]];
            w *= gl.weights[idx[i]];
        }
        const double s = 1.0 - eta.squaredNorm();
        if (s <= 0.0) continue;
        pts.push_back(eta);
        ws.push_back(w * s * s * s * s);
    }
    require(!pts.empty(), "BumpKernel::tensor: no nodes inside the unit ball");
    BumpKernel k;
    k.dim = n;
    k.nodes.resize(n, static_cast<Eigen::Index>(pts.size()));
    k.weights.resize(static_cast<Eigen::Index>(pts.size()));
    double total_w = 0.0;
    for (double w : ws) total_w += w;
    for (std::size_t j = 0; j < pts.size(); ++j) {
        k.nodes.col(j) = pts[j];
        k.weights[j] = ws[j] / total_w;
    }
    return k;
}

BumpKernel BumpKernel::cross(int n)
{
    require(n >= 1, "BumpKernel::cross: dimension must be positive");
    BumpKernel k;
    k.dim = n;
    // Per-axis second moment of theta is 1/(n+10); put all mass at radius r.
    const double r = std::sqrt(static_cast<double>(n) / (n + 10.0));
    k.nodes = Mat::Zero(n, 2 * n);
    k.weights = Vec::Constant(2 * n, 1.0 / (2.0 * n));
    for (int i = 0; i < n; ++i) {
        k.nodes(i, 2 * i) = r;
        k.nodes(i, 2 * i + 1) = -r;
    }
    return k;
}

BumpKernel BumpKernel::standard(int n)
{
    return n <= 3 ? tensor(n, 8) : cross(n);
}

double BumpKernel::second_moment(int axis) const
{
    require(axis >= 0 && axis < dim, "BumpKernel::second_moment: bad axis");
    return (weights.array() * nodes.row(axis).transpose().array().square()).sum();
}

MollifiedWeight::MollifiedWeight(ConvexWeight inner, double epsilon, BumpKernel kernel)
    : inner_(std::move(inner)), epsilon_(epsilon), kernel_(std::move(kernel))
{
    require(epsilon_ > 0.0, "mollify: epsilon must be positive");
    require(kernel_.dim == inner_.dim, "mollify: kernel dimension does not match the weight");
}

double MollifiedWeight::value_and_gradient(VecIn xi, VecOut g) const
{
    const int n = inner_.dim;
    Vec y(n), gk(n);
    g.setZero();
    double v = 0.0;
    for (Eigen::Index k = 0; k < kernel_.weights.size(); ++k) {
        y = xi - epsilon_ * kernel_.nodes.col(k);
        v += kernel_.weights[k] * inner_.value_and_gradient(y, gk);
        g += kernel_.weights[k] * gk;
    }
    return v;
}

double MollifiedWeight::value(VecIn xi) const
{
    Vec g(inner_.dim);
    return value_and_gradient(xi, g);
}

Vec MollifiedWeight::gradient(VecIn xi) const
{
    Vec g(inner_.dim);
    value_and_gradient(xi, g);
    return g;
}

ConvexWeight MollifiedWeight::as_weight() const
{
    auto self = std::make_shared<MollifiedWeight>(*this);
    ConvexWeight w;
    w.dim = inner_.dim;
    w.eval = [self](VecIn x) { return self->value(x); };
    w.subgrad = [self](VecIn x, VecOut g) { self->value_and_gradient(x, g); };
    w.fused = [self](VecIn x, VecOut g) { return self->value_and_gradient(x, g); };
    w.grad_lip = inner_.grad_lip;
    w.label = inner_.label + "_moll";
    return w;
}

MollifiedWeight mollify(const TruncatedWeight& inner, double epsilon, const BumpKernel& kernel)
{
    return MollifiedWeight(inner.as_weight(), epsilon, kernel);
}

MollifiedWeight mollify(const ConvexWeight& inner, double epsilon, const BumpKernel& kernel)
{
    return MollifiedWeight(inner, epsilon, kernel);
}

double truncated_generator_apply(const MollifiedWeight& psi, const SmoothFn& v, VecIn xi)
{
    return grid::apply_generator(psi.as_weight(), v, xi);
}

double perturbation_residual(const SmoothFn& V, const ConvexWeight& U_full, const ConvexWeight& U_trunc, double lambda,
                             const SmoothFn& f, const std::vector<Vec>& sample_points)
{
    require(!sample_points.empty(), "perturbation_residual: no sample points");
    const int n = U_trunc.dim;
    const int m = U_full.dim;
    require(n <= m, "perturbation_residual: truncated weight has more coordinates than the full weight");
    double worst = 0.0;
    Vec gf(m), gt(n);
    for (const Vec& x : sample_points) {
        require(x.size() == m, "perturbation_residual: sample point dimension mismatch");
        const Vec xi = x.head(n);
        const Jet j = V.jet(xi);
        U_full.gradient(x, gf);
        U_trunc.gradient(xi, gt);
        const double Lnu = j.hess.diagonal().sum() - (gf.head(n) + xi).dot(j.grad);
        const double correction = (gf.head(n) - gt).dot(j.grad);
        const double r = lambda * j.value - Lnu - f(xi) - correction;
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

double perturbation_residual(const SmoothFn& V, const ConvexWeight& U_full, const MollifiedWeight& U_trunc,
                             double lambda, const SmoothFn& f, const std::vector<Vec>& sample_points)
{
    return perturbation_residual(V, U_full, U_trunc.as_weight(), lambda, f, sample_points);
}

MCValue gradient_correction_norm(const ConvexWeight& U_full, const ConvexWeight& U_trunc, int n, const McOptions& mc)
{
    const int m = U_full.dim;
    require(U_trunc.dim == n && n <= m, "gradient_correction_norm: dimension mismatch");
    require(mc.samples >= 2, "gradient_correction_norm: need at least two samples");
    const long M = mc.samples;
    std::vector<double> logw(M), vals(M);
#pragma omp parallel
    {
        Vec x(m), gf(m), gt(n);
#pragma omp for schedule(static)
        for (long j = 0; j < M; ++j) {
            NormalStream rng(mc.seed, static_cast<std::uint64_t>(j));
            for (int i = 0; i < m; ++i) x[i] = rng.next();
            logw[j] = -U_full.value_and_gradient(x, gf);
            U_trunc.gradient(x.head(n), gt);
            gf.head(n) -= gt;
            vals[j] = gf.squaredNorm();
        }
    }
    double top = -INFINITY;
    for (double l : logw) top = std::max(top, l);
    for (double& l : logw) l = std::exp(l - top);
    return weighted_mean(logw, vals);
}

} // namespace wou::galerkin
