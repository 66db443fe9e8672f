#include "wou/grid.hpp"

#include "wou/rng.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <ostream>

namespace wou::grid {

void GridSpec::validate() const
{
    require(dim == 1 || dim == 2, "GridSpec: dim must be 1 or 2");
    require(radius > 0.0 && mesh > 0.0, "GridSpec: radius and mesh must be positive");
    require(mesh < radius, "GridSpec: mesh must be smaller than the radius");
    const double steps = radius / mesh;
    require(std::abs(steps - std::round(steps)) <= 1e-9 * steps, "GridSpec: mesh must divide the radius");
}

int GridSpec::half_count() const
{
    return static_cast<int>(std::floor(radius / mesh + 1e-9));
}

Eigen::Index GridSpec::size() const
{
    const Eigen::Index a = axis_count();
    return dim == 1 ? a : a * a;
}

Eigen::Index GridSolution::index(int i, int j) const
{
    return static_cast<Eigen::Index>(i) + static_cast<Eigen::Index>(j) * spec.axis_count();
}

Vec GridSolution::point(Eigen::Index idx) const
{
    const int a = spec.axis_count();
    Vec x(spec.dim);
    x[0] = spec.coord(static_cast<int>(idx % a));
    if (spec.dim == 2) x[1] = spec.coord(static_cast<int>(idx / a));
    return x;
}

bool GridSolution::on_boundary(Eigen::Index idx) const
{
    const int a = spec.axis_count();
    const auto i = static_cast<int>(idx % a);
    if (i == 0 || i == a - 1) return true;
    if (spec.dim == 2) {
        const auto j = static_cast<int>(idx / a);
        return j == 0 || j == a - 1;
    }
    return false;
}

namespace {

struct Cell {
    int k;
    double t;
};

Cell locate(const GridSpec& spec, double x)
{
    const int a = spec.axis_count();
    const double p = std::clamp(x / spec.mesh + spec.half_count(), 0.0, static_cast<double>(a - 1));
    const int k = std::min(static_cast<int>(std::floor(p)), a - 2);
    return {k, p - k};
}

template <class Get>
double multilinear(const GridSpec& spec, VecIn x, Get&& get)
{
    require(x.size() == spec.dim, "interpolate: dimension mismatch");
    const int a = spec.axis_count();
    const Cell cx = locate(spec, x[0]);
    if (spec.dim == 1) return (1.0 - cx.t) * get(cx.k) + cx.t * get(cx.k + 1);
    const Cell cy = locate(spec, x[1]);
    auto at = [&](int i, int j) { return get(static_cast<Eigen::Index>(i) + static_cast<Eigen::Index>(j) * a); };
    return (1.0 - cx.t) * (1.0 - cy.t) * at(cx.k, cy.k) + cx.t * (1.0 - cy.t) * at(cx.k + 1, cy.k) +
           (1.0 - cx.t) * cy.t * at(cx.k, cy.k + 1) + cx.t * cy.t * at(cx.k + 1, cy.k + 1);
}

} // namespace

double GridSolution::interpolate(VecIn x) const
{
    return multilinear(spec, x, [&](Eigen::Index i) { return values[i]; });
}

Vec GridSolution::interpolate_gradient(VecIn x) const
{
    Vec g(spec.dim);
    for (int d = 0; d < spec.dim; ++d) g[d] = multilinear(spec, x, [&](Eigen::Index i) { return gradient(i, d); });
    return g;
}

void GridSolution::write_csv(std::ostream& os) const
{
    os << (spec.dim == 1 ? "x0,value,grad0\n" : "x0,x1,value,grad0,grad1\n");
    os << std::setprecision(17);
    for (Eigen::Index idx = 0; idx < values.size(); ++idx) {
        const Vec x = point(idx);
        for (int d = 0; d < spec.dim; ++d) os << x[d] << ',';
        os << values[idx];
        for (int d = 0; d < spec.dim; ++d) os << ',' << gradient(idx, d);
        os << '\n';
    }
}

SmoothFn to_smooth_fn(const GridSolution& s, std::string name)
{
    const int n = s.spec.dim;
    const int a = s.spec.axis_count();
    const double h2 = s.spec.mesh * s.spec.mesh;
    auto data = std::make_shared<std::pair<GridSolution, Mat>>(s, Mat::Zero(s.values.size(), n * n));
    const Vec& u = data->first.values;
    Mat& H = data->second;
    auto clampi = [a](int i) { return std::clamp(i, 1, a - 2); };
    for (Eigen::Index idx = 0; idx < u.size(); ++idx) {
        // Boundary nodes reuse the nearest interior stencil.
        const int i = clampi(static_cast<int>(idx % a));
        const int j = n == 2 ? clampi(static_cast<int>(idx / a)) : 0;
        auto at = [&](int p, int q) { return u[static_cast<Eigen::Index>(p) + static_cast<Eigen::Index>(q) * a]; };
        H(idx, 0) = (at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)) / h2;
        if (n == 2) {
            H(idx, 3) = (at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1)) / h2;
            H(idx, 1) = H(idx, 2) =
                (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4.0 * h2);
        }
    }
    return SmoothFn(
        std::move(name), n, [data](VecIn x) { return data->first.interpolate(x.head(data->first.spec.dim)); },
        [data](VecIn x) {
            const GridSolution& g = data->first;
            const int d = g.spec.dim;
            const Vec xi = x.head(d);
            Jet j{g.interpolate(xi), Vec::Zero(x.size()), Mat::Zero(x.size(), x.size())};
            j.grad.head(d) = g.interpolate_gradient(xi);
            for (int p = 0; p < d; ++p)
                for (int q = 0; q < d; ++q)
                    j.hess(p, q) = multilinear(g.spec, xi, [&](Eigen::Index i) { return data->second(i, p * d + q); });
            return j;
        });
}

double apply_generator(const ConvexWeight& w, const SmoothFn& u, VecIn xi)
{
    require(xi.size() == w.dim, "apply_generator: point dimension does not match the weight");
    const Jet j = u.jet(xi);
    const Vec b = w.gradient(xi) + xi;
    return j.hess.diagonal().sum() - b.dot(j.grad);
}

double lyapunov_margin(const ConvexWeight& w, double radius, int samples, std::uint64_t seed)
{
    require(radius > 0.0 && samples >= 1, "lyapunov_margin: bad arguments");
    const int n = w.dim;
    auto value = [&](const Vec& x) { return 2.0 * n - 2.0 * w.gradient(x).dot(x) - 2.0 * x.squaredNorm(); };
    double best = value(Vec::Zero(n));
    if (n == 1) {
        Vec x(1);
        for (int k = 0; k < samples; ++k) {
            x[0] = samples == 1 ? 0.0 : -radius + 2.0 * radius * k / (samples - 1);
            best = std::max(best, value(x));
        }
        return best;
    }
    NormalStream rng(seed, 0x1a9);
    Vec x(n);
    for (int k = 0; k < samples; ++k) {
        for (int i = 0; i < n; ++i) x[i] = rng.next();
        const double r = radius * std::pow(rng.uniform(), 1.0 / n);
        x *= r / x.norm();
        best = std::max(best, value(x));
    }
    return best;
}

double lyapunov_bound(const ConvexWeight& w)
{
    return 2.0 * w.dim + 0.5 * w.gradient(Vec::Zero(w.dim)).squaredNorm();
}

GridOperator::GridOperator(const ConvexWeight& w, GridSpec spec) : spec_(spec)
{
    spec_.validate();
    require(w.dim == spec_.dim, "GridOperator: weight dimension does not match the grid");
    const Eigen::Index N = spec_.size();
    const int dim = spec_.dim;
    const int a = spec_.axis_count();
    const double h = spec_.mesh;
    potential_.resize(N);
    drift_.resize(N, dim);
    GridSolution probe;
    probe.spec = spec_;

#pragma omp parallel for schedule(dynamic, 64)
    for (Eigen::Index idx = 0; idx < N; ++idx) {
        const Vec x = probe.point(idx);
        Vec g(dim);
        potential_[idx] = w.value_and_gradient(x, g);
        drift_.row(idx) = (g + x).transpose();
    }
    require_finite(potential_, "weight values on the grid");
    if (!drift_.allFinite()) throw NumericalError("non-finite drift on the grid");

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N) * (2 * dim + 1));
    const double h2 = h * h;
    for (Eigen::Index idx = 0; idx < N; ++idx) {
        if (spec_.boundary == Boundary::absorbing && probe.on_boundary(idx)) continue;
        double diag = 0.0;
        bool upwinded = false;
        for (int d = 0; d < dim; ++d) {
            const Eigen::Index stride = d == 0 ? 1 : a;
            const int k = static_cast<int>(d == 0 ? idx % a : idx / a);
            double up = 0.0, dn = 0.0;
            if (k == 0) {
                up = 2.0 / h2;
            } else if (k == a - 1) {
                dn = 2.0 / h2;
            } else {
                const double b = drift_(idx, d);
                if (h * std::abs(b) <= 2.0) {
                    up = 1.0 / h2 - b / (2.0 * h);
                    dn = 1.0 / h2 + b / (2.0 * h);
                } else {
                    upwinded = true;
                    up = 1.0 / h2 + (b < 0.0 ? -b / h : 0.0);
                    dn = 1.0 / h2 + (b > 0.0 ? b / h : 0.0);
                }
            }
            if (up != 0.0) trip.emplace_back(idx, idx + stride, up);
            if (dn != 0.0) trip.emplace_back(idx, idx - stride, dn);
            diag -= up + dn;
        }
        trip.emplace_back(idx, idx, diag);
        if (upwinded) ++upwind_nodes_;
    }
    L_.resize(N, N);
    L_.setFromTriplets(trip.begin(), trip.end());
    L_.makeCompressed();
}

Vec GridOperator::sample(const std::function<double(VecIn)>& f) const
{
    const Eigen::Index N = spec_.size();
    Vec out(N);
    GridSolution probe;
    probe.spec = spec_;
    for (Eigen::Index idx = 0; idx < N; ++idx) out[idx] = f(probe.point(idx));
    require_finite(out, "grid data");
    return out;
}

Mat GridOperator::gradient(const Vec& u) const
{
    const Eigen::Index N = spec_.size();
    const int a = spec_.axis_count();
    const double h = spec_.mesh;
    Mat g(N, spec_.dim);
    for (Eigen::Index idx = 0; idx < N; ++idx) {
        for (int d = 0; d < spec_.dim; ++d) {
            const Eigen::Index s = d == 0 ? 1 : a;
            const int k = static_cast<int>(d == 0 ? idx % a : idx / a);
            if (k > 0 && k < a - 1) {
                g(idx, d) = (u[idx + s] - u[idx - s]) / (2.0 * h);
            } else if (spec_.boundary == Boundary::reflecting) {
                g(idx, d) = 0.0;
            } else if (k == 0) {
                g(idx, d) = (-3.0 * u[idx] + 4.0 * u[idx + s] - u[idx + 2 * s]) / (2.0 * h);
            } else {
                g(idx, d) = (3.0 * u[idx] - 4.0 * u[idx - s] + u[idx - 2 * s]) / (2.0 * h);
            }
        }
    }
    return g;
}

GridSolution GridOperator::make_solution(Vec u, double residual, double time) const
{
    require_finite(u, "grid solution");
    GridSolution s;
    s.spec = spec_;
    s.gradient = gradient(u);
    s.values = std::move(u);
    s.residual_norm = residual;
    s.time = time;
    return s;
}

namespace {

using ColSparse = Eigen::SparseMatrix<double>;

// Factorizes once, then solves A x = b for many right-hand sides.
class LinearSolver {
public:
    LinearSolver(const SparseMat& A, int dim) : A_(A), direct_(dim == 1)
    {
        if (direct_) {
            lu_.compute(ColSparse(A));
            if (lu_.info() != Eigen::Success) throw NumericalError("grid solver: sparse LU factorization failed");
        } else {
            it_.preconditioner().setDroptol(1e-6);
            it_.preconditioner().setFillfactor(20);
            it_.setTolerance(1e-12);
            it_.setMaxIterations(20000);
            it_.compute(A);
            if (it_.info() != Eigen::Success) throw NumericalError("grid solver: preconditioner setup failed");
        }
    }

    Vec solve(const Vec& b, const Vec& guess, double& residual)
    {
        Vec x;
        if (direct_) {
            x = lu_.solve(b);
            if (lu_.info() != Eigen::Success) throw NumericalError("grid solver: sparse LU solve failed");
        } else {
            x = it_.solveWithGuess(b, guess);
            if (it_.info() != Eigen::Success)
                throw NumericalError("grid solver: BiCGSTAB did not converge (error " + std::to_string(it_.error()) +
                                     ")");
        }
        residual = (A_ * x - b).lpNorm<Eigen::Infinity>();
        if (!std::isfinite(residual) || residual > 1e-7 * (1.0 + b.lpNorm<Eigen::Infinity>()))
            throw NumericalError("grid solver: discrete residual too large (" + std::to_string(residual) + ")");
        return x;
    }

private:
    const SparseMat& A_;
    bool direct_;
    Eigen::SparseLU<ColSparse> lu_;
    Eigen::BiCGSTAB<SparseMat, Eigen::IncompleteLUT<double>> it_;
};

} // namespace

GridSolution GridOperator::solve_elliptic_values(const Vec& f_nodes, double lambda) const
{
    require(lambda > 0.0, "solve_elliptic_grid: lambda must be positive");
    require(f_nodes.size() == spec_.size(), "solve_elliptic_grid: data size mismatch");
    require_finite(f_nodes, "grid data");
    SparseMat A = -L_;
    A.diagonal().array() += lambda;
    LinearSolver solver(A, spec_.dim);
    double residual = 0.0;
    Vec u = solver.solve(f_nodes, f_nodes / lambda, residual);
    return make_solution(std::move(u), residual, 0.0);
}

GridSolution GridOperator::solve_elliptic(const std::function<double(VecIn)>& f, double lambda) const
{
    require(lambda > 0.0, "solve_elliptic_grid: lambda must be positive");
    return solve_elliptic_values(sample(f), lambda);
}

std::vector<GridSolution> GridOperator::solve_parabolic(const std::function<double(VecIn)>& f, double horizon,
                                                        int steps) const
{
    require(horizon > 0.0, "solve_parabolic_grid: horizon must be positive");
    require(steps >= 1, "solve_parabolic_grid: need at least one step");
    const double dt = horizon / steps;
    SparseMat A = -dt * L_;
    A.diagonal().array() += 1.0;
    LinearSolver solver(A, spec_.dim);
    std::vector<GridSolution> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    Vec v = sample(f);
    out.push_back(make_solution(v, 0.0, 0.0));
    for (int k = 1; k <= steps; ++k) {
        double residual = 0.0;
        v = solver.solve(v, v, residual);
        out.push_back(make_solution(v, residual, k * dt));
    }
    return out;
}

GridSolution solve_elliptic_grid(const ConvexWeight& w, const std::function<double(VecIn)>& f, double lambda,
                                 const GridSpec& spec)
{
    require(lambda > 0.0, "solve_elliptic_grid: lambda must be positive");
    return GridOperator(w, spec).solve_elliptic(f, lambda);
}

std::vector<GridSolution> solve_parabolic_grid(const ConvexWeight& w, const std::function<double(VecIn)>& f,
                                               double horizon, int steps, const GridSpec& spec)
{
    require(horizon > 0.0, "solve_parabolic_grid: horizon must be positive");
    return GridOperator(w, spec).solve_parabolic(f, horizon, steps);
}

double bernstein_monitor(std::span<const GridSolution> slices, std::optional<double> interior_radius)
{
    double best = -INFINITY;
    for (const GridSolution& s : slices) {
        if (s.time <= 0.0) continue;
        for (Eigen::Index idx = 0; idx < s.values.size(); ++idx) {
            if (s.on_boundary(idx)) continue;
            if (interior_radius && s.point(idx).norm() > *interior_radius) continue;
            const double z = s.values[idx] * s.values[idx] + s.time * s.gradient.row(idx).squaredNorm();
            best = std::max(best, z);
        }
    }
    return best;
}

} // namespace wou::grid
