#ifndef AREL_EL_HPP
#define AREL_EL_HPP

#include <cmath>
#include <limits>

#include "arel/model.hpp"

namespace arel {

struct domain_error_el : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Per-observation estimating-function values: row t stacks the constraint
 * functions evaluated at observation t.
 */
struct EstimatingFunctionMatrix {
    Matrix G;   // n_obs x q

    Eigen::Index n_obs() const { return G.rows(); }
    Eigen::Index q() const { return G.cols(); }
};

struct ElSolverOptions {
    double tol = 1e-8;        // gradient max-norm
    int max_iter = 200;
    double bound = 1.0;       // denominators must stay above max(bound, eps)
    double eps = 1e-8;
    bool init_minus_n = false;  // start lambda at -n per coordinate instead of 0

    double effective_bound() const { return std::max(bound, eps); }
};

/// Multipliers, the implied probability weights, and the solved criterion value.
struct LagrangeState {
    Vector lambda;
    Vector pi;
    double inner_objective = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int iterations = 0;
    Vector constraint_residuals;  // sum_t pi_t G_t
};

/// pi_t = 1 / (n_obs + lambda' G_t).
inline Vector el_weights(const EstimatingFunctionMatrix& G, const Vector& lambda) {
    const double n = static_cast<double>(G.n_obs());
    Vector D = (G.G * lambda).array() + n;
    if ((D.array() <= 0.0).any())
        throw domain_error_el("el_weights: nonpositive denominator");
    return D.cwiseInverse();
}

/// l(lambda) = -sum_t log(n_obs + lambda' G_t) = sum_t log pi_t.
inline double inner_objective(const EstimatingFunctionMatrix& G, const Vector& lambda) {
    const double n = static_cast<double>(G.n_obs());
    Vector D = (G.G * lambda).array() + n;
    if ((D.array() <= 0.0).any())
        throw domain_error_el("inner_objective: nonpositive denominator");
    return -D.array().log().sum();
}

/**
 * Minimize the inner criterion over lambda by damped Newton descent. The
 * first trial step is half the Newton step; the step is halved further while
 * any denominator would cross the domain bound.
 */
inline LagrangeState solve_lambda(const EstimatingFunctionMatrix& em, const Vector* lambda_init,
                                  const ElSolverOptions& opts = {}) {
    const Matrix& G = em.G;
    const auto n_obs = G.rows();
    const auto q = G.cols();
    const double n = static_cast<double>(n_obs);
    const double bound = opts.effective_bound();

    LagrangeState st;
    st.lambda = Vector::Zero(q);
    if (lambda_init) {
        st.lambda = *lambda_init;
    } else if (opts.init_minus_n) {
        st.lambda = Vector::Constant(q, -n);
    }
    Vector D = (G * st.lambda).array() + n;
    if ((D.array() <= bound).any()) {
        st.lambda.setZero();
        D = (G * st.lambda).array() + n;
    }

    for (int it = 0; it < opts.max_iter; ++it) {
        st.iterations = it;
        const Matrix Gd = G.array().colwise() / D.array();   // rows g_t / D_t
        const Vector grad = -Gd.colwise().sum();
        // At a stationary point sum_t 1/D_t = 1 holds identically
        // (n sum 1/D = N - lambda' sum g/D). When zero lies outside the
        // convex hull of the g_t the iterates diverge with a vanishing
        // gradient but sum 1/D stays bounded away from 1, so requiring both
        // rejects the unbounded (infeasible) case instead of reporting a
        // spurious solution.
        if (grad.cwiseAbs().maxCoeff() < opts.tol &&
            std::abs(D.cwiseInverse().sum() - 1.0) < 1e-6) {
            st.converged = true;
            break;
        }
        const Matrix H = Gd.transpose() * Gd;
        Vector step = H.ldlt().solve(grad);
        if (!step.allFinite()) step = H.colPivHouseholderQr().solve(grad);

        double s = 0.5;
        bool ok = false;
        Vector cand, Dc;
        for (int k = 0; k < 50; ++k) {
            cand = st.lambda - s * step;
            Dc = (G * cand).array() + n;
            if ((Dc.array() > bound).all()) {
                ok = true;
                break;
            }
            s *= 0.5;
        }
        if (!ok) break;  // stuck at the domain boundary
        st.lambda = cand;
        D = Dc;
    }
    if (st.converged) {
        // Full-Newton polish: the damped phase stops at the gradient
        // tolerance, which leaves sum pi - 1 = lambda' grad / n possibly
        // above 1e-10 when lambda is large. A few undamped steps converge
        // quadratically and push the normalization residual to rounding.
        for (int it = 0; it < 10; ++it) {
            if (std::abs(D.cwiseInverse().sum() - 1.0) < 1e-12) break;
            const Matrix Gd = G.array().colwise() / D.array();
            const Vector grad = -Gd.colwise().sum();
            const Matrix H = Gd.transpose() * Gd;
            const Vector cand = st.lambda - H.ldlt().solve(grad);
            if (!cand.allFinite()) break;
            const Vector Dc = (G * cand).array() + n;
            if (!((Dc.array() > bound).all())) break;
            if ((cand - st.lambda).cwiseAbs().maxCoeff() == 0.0) break;
            st.lambda = cand;
            D = Dc;
        }
    }
    st.pi = D.cwiseInverse();
    st.inner_objective = -D.array().log().sum();
    st.constraint_residuals = G.transpose() * st.pi;
    return st;
}

namespace detail {

/**
 * Nelder-Mead on an objective to be maximized (infeasible points return
 * -infinity). Small and dependency-free; adequate for the low-dimensional
 * profile searches used here.
 */
template <typename F>
inline Vector nelder_mead_max(const F& f, const Vector& x0, double scale = 0.1,
                              int max_eval = 2000, double ftol = 1e-10) {
    const auto d = x0.size();
    std::vector<Vector> xs(d + 1, x0);
    std::vector<double> fs(d + 1);
    for (Eigen::Index i = 0; i < d; ++i)
        xs[i + 1](i) += scale * (std::abs(x0(i)) + 1.0);
    int evals = 0;
    for (auto i = 0; i <= d; ++i) { fs[i] = f(xs[i]); ++evals; }

    auto order = [&] {
        for (std::size_t i = 1; i < xs.size(); ++i)
            for (std::size_t j = i; j > 0 && fs[j] > fs[j - 1]; --j) {
                std::swap(fs[j], fs[j - 1]);
                std::swap(xs[j], xs[j - 1]);
            }
    };
    order();
    while (evals < max_eval) {
        if (std::abs(fs[0] - fs[d]) < ftol) break;
        Vector centroid = Vector::Zero(d);
        for (Eigen::Index i = 0; i < d; ++i) centroid += xs[i];
        centroid /= static_cast<double>(d);
        const Vector& worst = xs[d];
        Vector xr = centroid + (centroid - worst);
        double fr = f(xr); ++evals;
        if (fr > fs[0]) {
            Vector xe = centroid + 2.0 * (centroid - worst);
            double fe = f(xe); ++evals;
            if (fe > fr) { xs[d] = xe; fs[d] = fe; } else { xs[d] = xr; fs[d] = fr; }
        } else if (fr > fs[d - 1]) {
            xs[d] = xr; fs[d] = fr;
        } else {
            Vector xc = centroid + 0.5 * (worst - centroid);
            double fc = f(xc); ++evals;
            if (fc > fs[d]) {
                xs[d] = xc; fs[d] = fc;
            } else {
                for (Eigen::Index i = 1; i <= d; ++i) {
                    xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
                    fs[i] = f(xs[i]); ++evals;
                }
            }
        }
        order();
    }
    return xs[0];
}

}  // namespace detail

struct IidElResult {
    Vector beta;
    double sigma2 = 0.0;
    LagrangeState lagrange;
};

/**
 * Empirical-likelihood regression under uncorrelated errors: profile the
 * log-EL over beta (and sigma2 when the variance constraint is enabled)
 * with constraint rows x_t (y_t - x_t' beta) [; (y_t - x_t' beta)^2 - sigma2].
 */
inline IidElResult iid_el_fit(const RegressionDataset& data, bool estimate_sigma2,
                              const ElSolverOptions& solver_opts = {}) {
    const auto M = data.m();
    const Vector beta_ls = ls_fit(data);
    const Vector r0 = residual_series(data, beta_ls);
    const double s2_ls = r0.squaredNorm() / static_cast<double>(data.n());

    auto profile = [&](const Vector& theta) -> double {
        Vector beta = theta.head(M);
        Vector r = residual_series(data, beta);
        EstimatingFunctionMatrix em;
        em.G.resize(data.n(), estimate_sigma2 ? M + 1 : M);
        em.G.leftCols(M) = data.X.array().colwise() * r.array();
        if (estimate_sigma2) {
            const double s2 = std::exp(theta(M));
            em.G.col(M) = r.array().square() - s2;
        }
        LagrangeState st = solve_lambda(em, nullptr, solver_opts);
        if (!st.converged) return -std::numeric_limits<double>::infinity();
        return st.inner_objective;
    };

    Vector theta0(estimate_sigma2 ? M + 1 : M);
    theta0.head(M) = beta_ls;
    if (estimate_sigma2) theta0(M) = std::log(s2_ls);
    Vector theta = detail::nelder_mead_max(profile, theta0, 0.05);

    IidElResult res;
    res.beta = theta.head(M);
    res.sigma2 = estimate_sigma2 ? std::exp(theta(M)) : s2_ls;
    Vector r = residual_series(data, res.beta);
    EstimatingFunctionMatrix em;
    em.G.resize(data.n(), estimate_sigma2 ? M + 1 : M);
    em.G.leftCols(M) = data.X.array().colwise() * r.array();
    if (estimate_sigma2) em.G.col(M) = r.array().square() - res.sigma2;
    res.lagrange = solve_lambda(em, nullptr, solver_opts);
    if (!res.lagrange.converged)
        throw domain_error_el("iid_el_fit: no feasible weights at the profiled solution");
    return res;
}

}  // namespace arel

#endif  // AREL_EL_HPP
