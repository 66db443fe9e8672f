#pragma once

#include "wou/smooth_fn.hpp"
#include "wou/weight.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wou::galerkin {

// Evaluates a base weight at (xi, tail_j) for a fixed set of tail draws.
class TailSampler {
public:
    virtual ~TailSampler() = default;
    virtual long samples() const = 0;
    // values[j] and grads.col(j) (active coordinates only) for every frozen tail j.
    virtual void evaluate(VecIn xi, Eigen::Ref<Vec> values, Eigen::Ref<Mat> grads) const = 0;
};

// A convex weight in m Gaussian coordinates (a master truncation of an
// infinite-dimensional weight). Instances are owned by shared_ptr.
class CylindricalBase : public std::enable_shared_from_this<CylindricalBase> {
public:
    virtual ~CylindricalBase() = default;
    virtual int modes() const = 0;
    virtual std::string label() const = 0;
    virtual double value_and_gradient(VecIn x, VecOut g) const = 0;
    virtual std::optional<double> grad_lip() const = 0;
    // Mean contribution of the coordinates beyond modes(), when known in closed form.
    virtual double tail_remainder() const { return 0.0; }
    // tails: (modes()-n) x M standard normal draws for coordinates n..modes()-1.
    virtual std::unique_ptr<TailSampler> freeze(int n, Mat tails) const;

    double value(VecIn x) const;
    Vec gradient(VecIn x) const;
    ConvexWeight as_weight() const;
};

// Wraps a ConvexWeight over m coordinates.
std::shared_ptr<const CylindricalBase> cylindrical(ConvexWeight w);

struct McOptions {
    long samples = 10000;
    std::uint64_t seed = 1;
    bool memoize = true;
};

// psi_n(xi) = E[U(xi, Y)] over the Gaussian tail Y, estimated with a fixed set
// of tail draws per seed. The estimator is itself a convex function of xi with
// gradient-Lipschitz constant at most the base's.
class TruncatedWeight {
public:
    TruncatedWeight(std::shared_ptr<const CylindricalBase> base, int n, McOptions mc = {});

    int dim() const noexcept { return n_; }
    const CylindricalBase& base() const noexcept { return *base_; }
    const McOptions& mc() const noexcept { return mc_; }

    MCValue value(VecIn xi) const;
    std::vector<MCValue> gradient(VecIn xi) const;
    double value_and_gradient(VecIn xi, VecOut g) const;
    ConvexWeight as_weight() const;

private:
    struct Entry {
        MCValue value;
        std::vector<MCValue> grad;
    };
    struct Memo;
    Entry compute(VecIn xi) const;
    Entry lookup(VecIn xi) const;

    std::shared_ptr<const CylindricalBase> base_;
    int n_;
    McOptions mc_;
    std::shared_ptr<const TailSampler> sampler_;
    std::shared_ptr<Memo> memo_;
};

MCValue conditional_expectation(std::shared_ptr<const CylindricalBase> base, int n, VecIn xi, const McOptions& mc);
std::vector<MCValue> psi_gradient(std::shared_ptr<const CylindricalBase> base, int n, VecIn xi, const McOptions& mc);

// Discretized bump theta(eta) = c (1 - |eta|^2)^4 on the unit ball.
struct BumpKernel {
    int dim = 0;
    Mat nodes;   // dim x K, all strictly inside the unit ball
    Vec weights; // sums to 1

    // Tensor Gauss-Legendre with `per_axis` nodes, normalized on the nodes.
    static BumpKernel tensor(int n, int per_axis = 8);
    // Symmetric 2n-point rule matching the mean, covariance (1/(n+10)) I and all
    // third moments of theta; for dimensions where the tensor rule is too large.
    static BumpKernel cross(int n);
    // tensor for n <= 3, cross otherwise.
    static BumpKernel standard(int n);

    double second_moment(int axis = 0) const;
};

// psi^eps(xi) = sum_k w_k psi(xi - eps eta_k).
class MollifiedWeight {
public:
    MollifiedWeight(ConvexWeight inner, double epsilon, BumpKernel kernel);

    double value(VecIn xi) const;
    Vec gradient(VecIn xi) const;
    double value_and_gradient(VecIn xi, VecOut g) const;
    ConvexWeight as_weight() const;

    double epsilon() const noexcept { return epsilon_; }
    const BumpKernel& kernel() const noexcept { return kernel_; }
    const ConvexWeight& inner() const noexcept { return inner_; }

private:
    ConvexWeight inner_;
    double epsilon_;
    BumpKernel kernel_;
};

MollifiedWeight mollify(const TruncatedWeight& inner, double epsilon, const BumpKernel& kernel);
MollifiedWeight mollify(const ConvexWeight& inner, double epsilon, const BumpKernel& kernel);

// sum D_ii v - sum (D_i psi^eps + xi_i) D_i v.
double truncated_generator_apply(const MollifiedWeight& psi, const SmoothFn& v, VecIn xi);

// max over the sample points x (in R^m) of
// |lambda V - L_nu V - f - <grad U_full - grad U_trunc, grad V>|, where L_nu
// uses U_full and V, f depend on the first n coordinates.
double perturbation_residual(const SmoothFn& V, const ConvexWeight& U_full, const ConvexWeight& U_trunc, double lambda,
                             const SmoothFn& f, const std::vector<Vec>& sample_points);
double perturbation_residual(const SmoothFn& V, const ConvexWeight& U_full, const MollifiedWeight& U_trunc,
                             double lambda, const SmoothFn& f, const std::vector<Vec>& sample_points);

// Squared weighted L2 distance int |grad U_full - grad U_trunc|^2 dnu under the
// normalized nu = e^{-U_full} gamma_m, by self-normalized importance sampling.
MCValue gradient_correction_norm(const ConvexWeight& U_full, const ConvexWeight& U_trunc, int n, const McOptions& mc);

} // namespace wou::galerkin
