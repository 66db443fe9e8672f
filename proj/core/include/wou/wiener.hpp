#pragma once

#include "wou/galerkin.hpp"
#include "wou/smooth_fn.hpp"
#include "wou/weight.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace wou::wiener {

// Sine eigenbasis of the Brownian covariance on [0,1]. Mode i (0-based)
// has eigenvalue 4/(pi^2 (2i+1)^2) and e_i(s) = sqrt(2) sin(s / sqrt(lambda_i)).
// Coordinates xi are taken in the H-orthonormal frame h_i = sqrt(lambda_i) e_i,
// so the L2 coefficient of a path is c_i = sqrt(lambda_i) xi_i.
class WienerBasis {
public:
    explicit WienerBasis(int modes);

    int modes() const noexcept { return static_cast<int>(lambda_.size()); }
    double eigenvalue(int i) const { return lambda_[i]; }
    const Vec& eigenvalues() const noexcept { return lambda_; }
    double e(int i, double s) const;
    double h(int i, double s) const;
    // h_i(s) for all modes.
    Vec h_at(double s) const;
    // grid.size() x modes matrix of h_i(grid_k).
    Mat h_matrix(const Vec& grid) const;

    Vec frame_from_l2(VecIn c) const;
    Vec l2_from_frame(VecIn xi) const;

private:
    Vec lambda_;
};

// |f|_H^2 = sum c_i^2 / lambda_i for the L2 sine coefficients c of f.
double cm_norm_sq(const WienerBasis& basis, VecIn l2_coeffs);

// `points` equispaced nodes on [0,1], both ends included.
Vec uniform_grid(int points);

struct KLPathSample {
    Vec coeffs; // H-frame coordinates (iid standard normal for Brownian paths)
    Vec grid;
    Vec values;

    void write_csv(std::ostream& os) const;
};

KLPathSample path_from_coeffs(const WienerBasis& basis, VecIn coeffs, const Vec& grid);
KLPathSample sample_path(const WienerBasis& basis, std::uint64_t seed, int grid_points = 2048,
                         std::uint64_t stream = 0);

struct WeightEval {
    double value = 0.0;
    Vec gradient; // H-frame coefficients
};

// U(f) = int_0^1 f^2 = sum c_i^2 = sum lambda_i xi_i^2; gradient 2 lambda_i xi_i.
WeightEval energy_weight(const WienerBasis& basis, VecIn xi);

struct MaxEndpointEval {
    double value = 0.0;
    double argmax = 0.0;
    Eigen::Index argmax_index = 0;
    bool tie = false; // the grid maximum is attained more than once
    Vec gradient;     // h_i(argmax) + h_i(1)
};

// max over the grid of W plus W(1); the first maximizing grid index wins.
MaxEndpointEval max_endpoint_weight(const WienerBasis& basis, const KLPathSample& path);

class EnergyWeight final : public galerkin::CylindricalBase {
public:
    explicit EnergyWeight(int modes = 256) : basis_(modes) {}
    int modes() const override { return basis_.modes(); }
    std::string label() const override { return "energy"; }
    double value_and_gradient(VecIn x, VecOut g) const override;
    std::optional<double> grad_lip() const override { return 2.0 * basis_.eigenvalue(0); }
    // 1/2 - sum_{i<m} lambda_i
    double tail_remainder() const override;

    // Closed-form psi_n(xi) = sum_{i<n} lambda_i xi_i^2 + (1/2 - sum_{i<n} lambda_i).
    ConvexWeight truncation(int n) const;
    const WienerBasis& basis() const noexcept { return basis_; }

private:
    WienerBasis basis_;
};

class MaxEndpointWeight final : public galerkin::CylindricalBase {
public:
    MaxEndpointWeight(int modes = 256, int grid_points = 2048);
    int modes() const override { return basis_.modes(); }
    std::string label() const override { return "max_endpoint"; }
    double value_and_gradient(VecIn x, VecOut g) const override;
    std::optional<double> grad_lip() const override { return std::nullopt; }
    // Precomputes the tail paths on the grid: memory grid_points x samples.
    std::unique_ptr<galerkin::TailSampler> freeze(int n, Mat tails) const override;

    const WienerBasis& basis() const noexcept { return basis_; }
    const Vec& grid() const noexcept { return grid_; }

private:
    WienerBasis basis_;
    Vec grid_;
    Mat H_; // grid x modes
};

// Vector field on the first k coordinates: phi_i and the diagonal partials d_i phi_i.
struct CylindricalField {
    int k = 0;
    std::function<void(VecIn xi, VecOut phi, VecOut dphi)> eval;
};

// phi_i = components[i].
CylindricalField field_from(std::vector<SmoothFn> components);
// phi_i = d_i u for i < k.
CylindricalField gradient_field(const SmoothFn& u, int k);

// sum_{i<k} (d_i phi_i - phi_i d_i U - phi_i xi_i).
double weighted_divergence(const CylindricalField& field, const ConvexWeight& weight, VecIn xi);

// int <grad f, Phi> dnu + int f div_nu Phi dnu under nu = e^{-U} gamma_n,
// self-normalized importance sampling from gamma_n. Expected value 0.
MCValue ibp_residual(const SmoothFn& f, const CylindricalField& field, const ConvexWeight& weight, long samples,
                     std::uint64_t seed);

} // namespace wou::wiener
