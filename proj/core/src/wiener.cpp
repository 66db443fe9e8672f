#include "wou/wiener.hpp"

#include "wou/rng.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

namespace wou::wiener {

WienerBasis::WienerBasis(int modes)
{
    require(modes >= 1, "WienerBasis: need at least one mode");
    lambda_.resize(modes);
    for (int i = 0; i < modes; ++i) {
        const double k = 2.0 * i + 1.0;
        lambda_[i] = 4.0 / (std::numbers::pi * std::numbers::pi * k * k);
    }
}

double WienerBasis::e(int i, double s) const
{
    return std::numbers::sqrt2 * std::sin((2.0 * i + 1.0) * std::numbers::pi * 0.5 * s);
}

double WienerBasis::h(int i, double s) const
{
    return std::sqrt(lambda_[i]) * e(i, s);
}

Vec WienerBasis::h_at(double s) const
{
    Vec out(modes());
    for (int i = 0; i < modes(); ++i) out[i] = h(i, s);
    return out;
}

Mat WienerBasis::h_matrix(const Vec& grid) const
{
    Mat H(grid.size(), modes());
    for (Eigen::Index k = 0; k < grid.size(); ++k) H.row(k) = h_at(grid[k]).transpose();
    return H;
}

Vec WienerBasis::frame_from_l2(VecIn c) const
{
    require(c.size() <= modes(), "frame_from_l2: too many coefficients");
    return c.array() / lambda_.head(c.size()).array().sqrt();
}

Vec WienerBasis::l2_from_frame(VecIn xi) const
{
    require(xi.size() <= modes(), "l2_from_frame: too many coefficients");
    return xi.array() * lambda_.head(xi.size()).array().sqrt();
}

double cm_norm_sq(const WienerBasis& basis, VecIn c)
{
    require(c.size() <= basis.modes(), "cm_norm_sq: more coefficients than modes");
    require_finite(c, "cm_norm_sq coefficients");
    return (c.array().square() / basis.eigenvalues().head(c.size()).array()).sum();
}

Vec uniform_grid(int points)
{
    require(points >= 2, "uniform_grid: need at least two points");
    return Vec::LinSpaced(points, 0.0, 1.0);
}

void KLPathSample::write_csv(std::ostream& os) const
{
    os << "s,W\n" << std::setprecision(17);
    for (Eigen::Index k = 0; k < grid.size(); ++k) os << grid[k] << ',' << values[k] << '\n';
}

KLPathSample path_from_coeffs(const WienerBasis& basis, VecIn coeffs, const Vec& grid)
{
    require(coeffs.size() <= basis.modes(), "path_from_coeffs: more coefficients than modes");
    KLPathSample p;
    p.coeffs = coeffs;
    p.grid = grid;
    p.values = basis.h_matrix(grid).leftCols(coeffs.size()) * coeffs;
    require_finite(p.values, "path values");
    return p;
}

KLPathSample sample_path(const WienerBasis& basis, std::uint64_t seed, int grid_points, std::uint64_t stream)
{
    NormalStream rng(seed, stream);
    Vec c(basis.modes());
    for (auto& v : c) v = rng.next();
    return path_from_coeffs(basis, c, uniform_grid(grid_points));
}

WeightEval energy_weight(const WienerBasis& basis, VecIn xi)
{
    require(xi.size() <= basis.modes(), "energy_weight: more coefficients than modes");
    const auto lam = basis.eigenvalues().head(xi.size()).array();
    WeightEval out;
    out.value = (lam * xi.array().square()).sum();
    out.gradient = 2.0 * lam * xi.array();
    return out;
}

MaxEndpointEval max_endpoint_weight(const WienerBasis& basis, const KLPathSample& path)
{
    require(path.grid.size() >= 2 && path.grid.size() == path.values.size(), "max_endpoint_weight: bad path");
    require(path.grid[path.grid.size() - 1] == 1.0, "max_endpoint_weight: grid must end at 1");
    MaxEndpointEval out;
    Eigen::Index k = 0;
    for (Eigen::Index j = 1; j < path.values.size(); ++j)
        if (path.values[j] > path.values[k]) k = j;
    for (Eigen::Index j = 0; j < path.values.size(); ++j)
        if (j != k && path.values[j] == path.values[k]) out.tie = true;
    const double end = path.values[path.values.size() - 1];
    out.argmax_index = k;
    out.argmax = path.grid[k];
    out.value = path.values[k] + end;
    out.gradient = basis.h_at(out.argmax) + basis.h_at(1.0);
    return out;
}

double EnergyWeight::value_and_gradient(VecIn x, VecOut g) const
{
    require(x.size() == modes(), "EnergyWeight: dimension mismatch");
    const auto lam = basis_.eigenvalues().array();
    g = 2.0 * lam * x.array();
    return (lam * x.array().square()).sum();
}

double EnergyWeight::tail_remainder() const
{
    return 0.5 - basis_.eigenvalues().sum();
}

ConvexWeight EnergyWeight::truncation(int n) const
{
    require(n >= 1 && n <= modes(), "EnergyWeight::truncation: bad dimension");
    const Vec lam = basis_.eigenvalues().head(n);
    ConvexWeight w = weights::diag_quadratic(2.0 * lam, 0.5 - lam.sum());
    w.label = "energy";
    return w;
}

namespace {

class MaxEndpointSampler final : public galerkin::TailSampler {
public:
    MaxEndpointSampler(const Mat& H, int n, const Mat& tails) : Hn_(H.leftCols(n)), tail_paths_(H.rightCols(H.cols() - n) * tails) {}

    long samples() const override { return tail_paths_.cols(); }

    void evaluate(VecIn xi, Eigen::Ref<Vec> values, Eigen::Ref<Mat> grads) const override
    {
        const Vec head = Hn_ * xi;
        const Eigen::Index G = head.size();
        const Eigen::Index M = tail_paths_.cols();
#pragma omp parallel for schedule(static)
        for (Eigen::Index j = 0; j < M; ++j) {
            const double* tp = tail_paths_.col(j).data();
            Eigen::Index k = 0;
            double best = head[0] + tp[0];
            for (Eigen::Index q = 1; q < G; ++q) {
                const double v = head[q] + tp[q];
                if (v > best) {
                    best = v;
                    k = q;
                }
            }
            values[j] = best + head[G - 1] + tp[G - 1];
            grads.col(j) = (Hn_.row(k) + Hn_.row(G - 1)).transpose();
        }
    }

private:
    Mat Hn_;
    Mat tail_paths_;
};

} // namespace

MaxEndpointWeight::MaxEndpointWeight(int modes, int grid_points)
    : basis_(modes), grid_(uniform_grid(grid_points)), H_(basis_.h_matrix(grid_))
{
}

double MaxEndpointWeight::value_and_gradient(VecIn x, VecOut g) const
{
    require(x.size() == modes(), "MaxEndpointWeight: dimension mismatch");
    const Vec W = H_ * x;
    Eigen::Index k = 0;
    for (Eigen::Index q = 1; q < W.size(); ++q)
        if (W[q] > W[k]) k = q;
    const Eigen::Index last = W.size() - 1;
    g = (H_.row(k) + H_.row(last)).transpose();
    return W[k] + W[last];
}

std::unique_ptr<galerkin::TailSampler> MaxEndpointWeight::freeze(int n, Mat tails) const
{
    require(tails.rows() == modes() - n, "MaxEndpointWeight::freeze: tail dimension mismatch");
    return std::make_unique<MaxEndpointSampler>(H_, n, tails);
}

CylindricalField field_from(std::vector<SmoothFn> components)
{
    require(!components.empty(), "field_from: no components");
    CylindricalField f;
    f.k = static_cast<int>(components.size());
    f.eval = [comps = std::move(components)](VecIn xi, VecOut phi, VecOut dphi) {
        for (std::size_t i = 0; i < comps.size(); ++i) {
            const Jet j = comps[i].jet(xi);
            phi[i] = j.value;
            dphi[i] = j.grad[i];
        }
    };
    return f;
}

CylindricalField gradient_field(const SmoothFn& u, int k)
{
    require(k >= 1, "gradient_field: k must be positive");
    CylindricalField f;
    f.k = k;
    f.eval = [u, k](VecIn xi, VecOut phi, VecOut dphi) {
        const Jet j = u.jet(xi);
        phi = j.grad.head(k);
        dphi = j.hess.diagonal().head(k);
    };
    return f;
}

double weighted_divergence(const CylindricalField& field, const ConvexWeight& weight, VecIn xi)
{
    const int k = field.k;
    require(xi.size() == weight.dim && k <= weight.dim, "weighted_divergence: dimension mismatch");
    Vec phi(k), dphi(k);
    field.eval(xi, phi, dphi);
    const Vec g = weight.gradient(xi);
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += dphi[i] - phi[i] * g[i] - phi[i] * xi[i];
    return s;
}

MCValue ibp_residual(const SmoothFn& f, const CylindricalField& field, const ConvexWeight& weight, long samples,
                     std::uint64_t seed)
{
    require(samples >= 2, "ibp_residual: need at least two samples");
    const int n = weight.dim;
    const int k = field.k;
    require(k <= n, "ibp_residual: field has more components than the weight");
    std::vector<double> logw(samples), vals(samples);
#pragma omp parallel
    {
        Vec x(n), g(n), phi(k), dphi(k);
#pragma omp for schedule(static)
        for (long j = 0; j < samples; ++j) {
            NormalStream rng(seed, static_cast<std::uint64_t>(j));
            for (int i = 0; i < n; ++i) x[i] = rng.next();
            logw[j] = -weight.value_and_gradient(x, g);
            field.eval(x, phi, dphi);
            const Jet jf = f.jet(x);
            double div = 0.0;
            for (int i = 0; i < k; ++i) div += dphi[i] - phi[i] * g[i] - phi[i] * x[i];
            vals[j] = jf.grad.head(k).dot(phi) + jf.value * div;
        }
    }
    double top = -INFINITY;
    for (double l : logw) top = std::max(top, l);
    for (double& l : logw) l = std::exp(l - top);
    return weighted_mean(logw, vals);
}

} // namespace wou::wiener
