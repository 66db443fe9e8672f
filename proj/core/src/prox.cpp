#include "wou/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace wou::prox {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kBundleCap = 40;

void check_args(const ConvexWeight& w, VecIn x, double alpha)
{
    require(alpha > 0.0, "prox: alpha must be positive");
    require(x.size() == w.dim, "prox: point dimension does not match the weight");
}

double qp_value(const Mat& Q, const Vec& c, const Vec& w)
{
    return 0.5 * w.dot(Q * w) - c.dot(w);
}

// min 0.5 w'Qw - c'w over the simplex, Q positive semidefinite, by a primal
// active-set method warm-started from w. Faces where q is unbounded below
// (Q singular on the face) are left along a zero-curvature descent direction.
Vec solve_simplex_qp(const Mat& Q, const Vec& c, Vec w)
{
    const Eigen::Index m = c.size();
    if (m == 1) return Vec::Ones(1);
    w = w.cwiseMax(0.0);
    if (!(w.sum() > 0.0)) w = Vec::Constant(m, 1.0 / static_cast<double>(m));
    w /= w.sum();
    std::vector<bool> in(m);
    for (Eigen::Index j = 0; j < m; ++j) in[j] = w[j] > 0.0;
    const double scale = 1.0 + Q.cwiseAbs().maxCoeff() + c.cwiseAbs().maxCoeff();
    const double tol = 1e3 * kEps * scale;

    for (Eigen::Index it = 0; it < 20 * m + 100; ++it) {
        std::vector<Eigen::Index> B;
        for (Eigen::Index j = 0; j < m; ++j)
            if (in[j]) B.push_back(j);
        const auto b = static_cast<Eigen::Index>(B.size());
        const Vec g = Q * w - c;
        Mat QB(b, b);
        Vec gB(b);
        for (Eigen::Index i = 0; i < b; ++i) {
            gB[i] = g[B[i]];
            for (Eigen::Index k = 0; k < b; ++k) QB(i, k) = Q(B[i], B[k]);
        }

        // Step p on the face: QB p + gB = mu 1, sum p = 0.
        Mat K = Mat::Zero(b + 1, b + 1);
        K.topLeftCorner(b, b) = QB;
        K.topRightCorner(b, 1).setConstant(-1.0);
        K.bottomLeftCorner(1, b).setConstant(1.0);
        Vec rhs = Vec::Zero(b + 1);
        rhs.head(b) = -gB;
        const Eigen::CompleteOrthogonalDecomposition<Mat> cod(K);
        Vec sol = cod.solve(rhs);
        Vec p = sol.head(b);
        double mu = sol[b];
        const bool consistent = (K * sol - rhs).norm() <= tol * (1.0 + rhs.norm());
        if (!consistent) {
            // Unbounded face: descend along the projection of -gB onto null(K restricted to p).
            Mat A(b + 1, b);
            A.topRows(b) = QB;
            A.bottomRows(1).setConstant(1.0);
            const Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
            const Eigen::Index r = svd.rank();
            const Mat Z = svd.matrixV().rightCols(b - r);
            p = -Z * (Z.transpose() * gB);
            p *= 1e6 / std::max(p.cwiseAbs().maxCoeff(), 1e-300);
        }

        if (p.cwiseAbs().maxCoeff() <= tol) {
            // Stationary on the face: release the most violated bound, if any.
            mu = gB.mean();
            Eigen::Index enter = -1;
            double worst = -tol;
            for (Eigen::Index j = 0; j < m; ++j)
                if (!in[j] && g[j] - mu < worst) {
                    worst = g[j] - mu;
                    enter = j;
                }
            if (enter < 0) return w;
            in[enter] = true;
            continue;
        }

        double step = consistent ? 1.0 : INFINITY;
        Eigen::Index block = -1;
        for (Eigen::Index i = 0; i < b; ++i)
            if (p[i] < 0.0) {
                const double s = -w[B[i]] / p[i];
                if (s < step) {
                    step = s;
                    block = B[i];
                }
            }
        for (Eigen::Index i = 0; i < b; ++i) w[B[i]] += step * p[i];
        if (block >= 0) {
            w[block] = 0.0;
            in[block] = false;
        }
        w = w.cwiseMax(0.0);
        w /= w.sum();
    }
    return w;
}

ProxResult finish(Vec h, double fval, double alpha, long iterations, double residual)
{
    ProxResult r;
    r.envelope = fval + h.squaredNorm() / (2.0 * alpha);
    r.gradient = -h / alpha;
    r.minimizer = std::move(h);
    r.iterations = iterations;
    r.residual = residual;
    return r;
}

ProxResult prox_gradient(const ConvexWeight& w, VecIn x, double alpha, const Options& opt)
{
    const double L = *w.grad_lip;
    const double step = alpha / (1.0 + alpha * L);
    const int n = w.dim;
    Vec h = Vec::Zero(n), g(n), y(n);
    double residual = INFINITY;
    for (long it = 0; it <= opt.max_iter; ++it) {
        y = x + h;
        const double fv = w.value_and_gradient(y, g);
        require_finite(g, "weight subgradient");
        g += h / alpha;
        residual = g.norm();
        if (residual <= opt.tol) return finish(h, fv, alpha, it, residual);
        h -= step * g;
    }
    throw ConvergenceError("prox_point: gradient descent did not converge", residual, opt.max_iter);
}

ProxResult prox_bundle(const ConvexWeight& w, VecIn x, double alpha, const Options& opt)
{
    const int n = w.dim;
    // Cuts f(x+h) >= c_j + <s_j, h> collected as columns of S.
    Mat S(n, 0);
    Vec c(0), wts(0);
    Vec g(n), y(n);

    auto add_cut = [&](const Vec& h, double fv, const Vec& s) {
        const Eigen::Index m = S.cols();
        S.conservativeResize(n, m + 1);
        c.conservativeResize(m + 1);
        wts.conservativeResize(m + 1);
        S.col(m) = s;
        c[m] = fv - s.dot(h);
        wts[m] = 0.0;
    };

    Vec h = Vec::Zero(n);
    y = x;
    double fv = w.value_and_gradient(y, g);
    require_finite(fv, "weight value");
    require_finite(g, "weight subgradient");
    Vec best_h = h;
    double best_f = fv;
    double best_obj = fv;
    double lower = -INFINITY;
    add_cut(h, fv, g);
    wts[0] = 1.0;
    double residual = INFINITY;

    for (long it = 1; it <= opt.max_iter; ++it) {
        const Mat Q = alpha * (S.transpose() * S);
        wts = solve_simplex_qp(Q, c, wts);
        const double dual = -qp_value(Q, c, wts);
        lower = std::max(lower, dual);
        h = -alpha * (S * wts);

        y = x + h;
        fv = w.value_and_gradient(y, g);
        require_finite(fv, "weight value");
        require_finite(g, "weight subgradient");
        const double obj = fv + h.squaredNorm() / (2.0 * alpha);
        if (obj < best_obj) {
            best_obj = obj;
            best_f = fv;
            best_h = h;
        }
        const double scale = 1.0 + std::abs(best_obj) + c.cwiseAbs().maxCoeff() + alpha * (S * wts).squaredNorm();
        const double gap = std::max(0.0, best_obj - lower - 64.0 * kEps * scale);
        residual = std::sqrt(2.0 * gap / alpha);
        if (residual <= opt.tol) return finish(best_h, best_f, alpha, it, residual);

        // Keep the cuts active in the model optimum, fold the rest into an aggregate if needed.
        std::vector<Eigen::Index> keep;
        for (Eigen::Index j = 0; j < wts.size(); ++j)
            if (wts[j] > 0.0) keep.push_back(j);
        if (static_cast<int>(keep.size()) >= kBundleCap) {
            const Vec s_agg = S * wts;
            const double c_agg = c.dot(wts);
            S.resize(n, 1);
            S.col(0) = s_agg;
            c = Vec::Constant(1, c_agg);
            wts = Vec::Ones(1);
        } else {
            Mat S2(n, keep.size());
            Vec c2(keep.size()), w2(keep.size());
            for (std::size_t a = 0; a < keep.size(); ++a) {
                S2.col(a) = S.col(keep[a]);
                c2[a] = c[keep[a]];
                w2[a] = wts[keep[a]];
            }
            S = std::move(S2);
            c = std::move(c2);
            wts = std::move(w2);
        }
        add_cut(h, fv, g);
    }
    throw ConvergenceError("prox_point: bundle method did not converge", residual, opt.max_iter);
}

} // namespace

ProxResult prox_point(const ConvexWeight& w, VecIn x, double alpha, const Options& opt)
{
    check_args(w, x, alpha);
    require(opt.tol > 0.0 && opt.max_iter > 0, "prox: tolerance and budget must be positive");
    if (w.grad_lip) return prox_gradient(w, x, alpha, opt);
    return prox_bundle(w, x, alpha, opt);
}

double moreau_envelope(const ConvexWeight& w, VecIn x, double alpha, const Options& opt)
{
    return prox_point(w, x, alpha, opt).envelope;
}

Vec envelope_gradient(const ConvexWeight& w, VecIn x, double alpha, const Options& opt)
{
    return prox_point(w, x, alpha, opt).gradient;
}

double check_optimality(const ConvexWeight& w, VecIn x, double alpha, VecIn candidate, const std::vector<Vec>& probes)
{
    require(!probes.empty(), "check_optimality: probe set is empty");
    require(alpha > 0.0, "check_optimality: alpha must be positive");
    const double fp = w.value(x + candidate);
    double worst = INFINITY;
    for (const Vec& h : probes) {
        const double margin = w.value(x + h) + candidate.dot(h - candidate) / alpha - fp;
        worst = std::min(worst, margin);
    }
    return worst;
}

AffineMinorant affine_minorant(const ConvexWeight& w, VecIn x0)
{
    require(x0.size() == w.dim, "affine_minorant: dimension mismatch");
    AffineMinorant a;
    a.anchor = x0;
    a.slope = w.gradient(x0);
    a.intercept = w.value(x0);
    return a;
}

ConvexWeight moreau_weight(const ConvexWeight& w, double alpha, const Options& opt)
{
    require(alpha > 0.0, "moreau_weight: alpha must be positive");
    ConvexWeight out;
    out.dim = w.dim;
    out.eval = [w, alpha, opt](VecIn x) { return moreau_envelope(w, x, alpha, opt); };
    out.subgrad = [w, alpha, opt](VecIn x, VecOut g) { g = envelope_gradient(w, x, alpha, opt); };
    out.fused = [w, alpha, opt](VecIn x, VecOut g) {
        const ProxResult r = prox_point(w, x, alpha, opt);
        g = r.gradient;
        return r.envelope;
    };
    out.grad_lip = 1.0 / alpha;
    out.label = "moreau_" + w.label;
    return out;
}

Mat fd_jacobian(const std::function<Vec(VecIn)>& field, VecIn x, double step)
{
    require(step > 0.0, "fd_jacobian: step must be positive");
    const Eigen::Index n = x.size();
    Vec xp = x, xm = x;
    Mat J;
    for (Eigen::Index j = 0; j < n; ++j) {
        xp[j] += step;
        xm[j] -= step;
        const Vec col = (field(xp) - field(xm)) / (2.0 * step);
        if (j == 0) J.resize(col.size(), n);
        J.col(j) = col;
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return J;
}

} // namespace wou::prox
