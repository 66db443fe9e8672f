#pragma once

#include "wou/smooth_fn.hpp"
#include "wou/weight.hpp"

#include <Eigen/Sparse>

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace wou::grid {

enum class Boundary { reflecting, absorbing };

struct GridSpec {
    int dim = 1;
    double radius = 6.0;
    double mesh = 1.0 / 64.0;
    Boundary boundary = Boundary::reflecting;

    void validate() const;
    int half_count() const;
    int axis_count() const { return 2 * half_count() + 1; }
    Eigen::Index size() const;
    double coord(int k) const { return (k - half_count()) * mesh; }
};

struct GridSolution {
    GridSpec spec;
    Vec values;
    Mat gradient; // size() x dim
    double residual_norm = 0.0;
    double time = 0.0;

    Eigen::Index index(int i, int j = 0) const;
    Vec point(Eigen::Index idx) const;
    bool on_boundary(Eigen::Index idx) const;
    // Multilinear interpolation of the nodal values.
    double interpolate(VecIn x) const;
    Vec interpolate_gradient(VecIn x) const;
    // Columns x0[,x1],value,grad0[,grad1].
    void write_csv(std::ostream& os) const;
};

// The solution as a smooth function: nodal values, central-difference
// gradients and second differences, each interpolated multilinearly.
SmoothFn to_smooth_fn(const GridSolution& s, std::string name = "grid");

// sum D_ii u - sum (D_i phi + xi_i) D_i u at xi.
double apply_generator(const ConvexWeight& w, const SmoothFn& u, VecIn xi);

// max of L_phi |xi|^2 = 2n - 2<grad phi, xi> - 2|xi|^2 over the ball of the given radius.
// n = 1 uses a uniform grid of `samples` points; n > 1 uses seeded samples plus the origin.
double lyapunov_margin(const ConvexWeight& w, double radius, int samples, std::uint64_t seed = 7);

// 2n + |grad phi(0)|^2 / 2, the maximum over R^n of 2n - 2<grad phi(0), xi> - 2|xi|^2.
double lyapunov_bound(const ConvexWeight& w);

using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Discrete generator on a fixed grid. Caches phi and its gradient at the
// nodes so repeated solves with different lambda or data reuse them.
//
// Diffusion is centered. The drift b = grad phi + xi is centered where
// h|b| <= 2 and upwinded elsewhere, which keeps the matrix an M-matrix.
class GridOperator {
public:
    GridOperator(const ConvexWeight& w, GridSpec spec);

    const GridSpec& spec() const noexcept { return spec_; }
    const Vec& potential() const noexcept { return potential_; }
    const Mat& drift() const noexcept { return drift_; }
    const SparseMat& generator() const noexcept { return L_; }
    long upwind_nodes() const noexcept { return upwind_nodes_; }

    Vec sample(const std::function<double(VecIn)>& f) const;
    Mat gradient(const Vec& u) const;

    GridSolution solve_elliptic(const std::function<double(VecIn)>& f, double lambda) const;
    GridSolution solve_elliptic_values(const Vec& f_nodes, double lambda) const;
    std::vector<GridSolution> solve_parabolic(const std::function<double(VecIn)>& f, double horizon, int steps) const;

private:
    GridSolution make_solution(Vec u, double residual, double time) const;

    GridSpec spec_;
    Vec potential_;
    Mat drift_;
    SparseMat L_;
    long upwind_nodes_ = 0;
};

GridSolution solve_elliptic_grid(const ConvexWeight& w, const std::function<double(VecIn)>& f, double lambda,
                                 const GridSpec& spec);
std::vector<GridSolution> solve_parabolic_grid(const ConvexWeight& w, const std::function<double(VecIn)>& f,
                                               double horizon, int steps, const GridSpec& spec);

// max over slices with t > 0 and non-boundary nodes of v^2 + t |grad v|^2,
// optionally restricted to |xi| <= interior_radius.
double bernstein_monitor(std::span<const GridSolution> slices, std::optional<double> interior_radius = {});

} // namespace wou::grid
