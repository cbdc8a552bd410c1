#ifndef AREL_SIM_HPP
#define AREL_SIM_HPP

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "arel/cel.hpp"
#include "arel/cml.hpp"

namespace arel {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Error law for the innovations a_t: either normal(0, sigma2) or the
 * two-component mixture w N(0,1) + (1-w) N(outlier_mean, outlier_var).
 */
struct ErrorModel {
    enum class Kind { normal, mixture } kind = Kind::normal;
    double weight = 0.9;        // mixture weight of the clean N(0,1) component
    double outlier_mean = 0.0;
    double outlier_var = 1.0;
};

struct SimulationConfig {
    int n = 50;
    int reps = 200;
    ArModelParams true_params;
    ErrorModel error_model;
    std::uint64_t seed = 0;
    std::vector<std::string> methods = {"cml", "cel"};
    bool fixed_design = false;  // reuse the replication-0 design for every replication
    int burn_in = 100;
    int threads = 0;            // 0 = hardware concurrency

    void validate() const {
        if (reps < 1) throw config_error("reps must be >= 1");
        if (n < 1) throw config_error("n must be >= 1");
        if (true_params.sigma2 <= 0.0) throw config_error("sigma2 must be > 0");
        if (error_model.kind == ErrorModel::Kind::mixture &&
            (error_model.weight <= 0.0 || error_model.weight >= 1.0))
            throw config_error("mixture weight must lie in (0,1)");
        for (const auto& m : methods)
            if (m != "cml" && m != "cel") throw config_error("unknown method: " + m);
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Per-replication seed derived from the master seed by a counter-based split.
inline std::uint64_t replication_seed(std::uint64_t master, std::uint64_t rep) {
    return splitmix64(master ^ splitmix64(rep + 1));
}

inline double draw_innovation(const ErrorModel& em, double sigma, std::mt19937_64& rng,
                              std::normal_distribution<double>& stdnorm,
                              std::uniform_real_distribution<double>& unif) {
    if (em.kind == ErrorModel::Kind::normal) return sigma * stdnorm(rng);
    if (unif(rng) < em.weight) return stdnorm(rng);
    return em.outlier_mean + std::sqrt(em.outlier_var) * stdnorm(rng);
}

}  // namespace detail

/**
 * Generate one synthetic dataset: iid standard-normal predictors, AR(p)
 * errors driven by the configured innovation law, started from zeros and
 * run through a discarded burn-in.
 */
inline RegressionDataset generate_dataset(const SimulationConfig& cfg, std::uint64_t rep = 0) {
    cfg.validate();
    if (!is_stationary(cfg.true_params.phi))
        throw config_error("generate_dataset: non-stationary true phi");

    std::mt19937_64 rng(detail::replication_seed(cfg.seed, rep));
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const auto M = cfg.true_params.beta.size();
    const auto p = cfg.true_params.p();
    const double sigma = std::sqrt(cfg.true_params.sigma2);

    RegressionDataset d;
    d.X.resize(cfg.n, M);
    // fixed_design replays the replication-0 predictor stream
    {
        std::mt19937_64 xrng(detail::replication_seed(
            cfg.seed ^ 0xd1b54a32d192ed03ULL, cfg.fixed_design ? 0 : rep));
        std::normal_distribution<double> xnorm(0.0, 1.0);
        for (Eigen::Index i = 0; i < cfg.n; ++i)
            for (Eigen::Index j = 0; j < M; ++j) d.X(i, j) = xnorm(xrng);
    }

    std::vector<double> lags(static_cast<std::size_t>(p), 0.0);  // e_{t-1}, ..., e_{t-p}
    auto step = [&]() {
        double e = detail::draw_innovation(cfg.error_model, sigma, rng, stdnorm, unif);
        for (Eigen::Index j = 0; j < p; ++j)
            e += cfg.true_params.phi(j) * lags[static_cast<std::size_t>(j)];
        for (Eigen::Index j = p - 1; j > 0; --j)
            lags[static_cast<std::size_t>(j)] = lags[static_cast<std::size_t>(j - 1)];
        if (p > 0) lags[0] = e;
        return e;
    };
    for (int t = 0; t < cfg.burn_in; ++t) (void)step();

    d.y.resize(cfg.n);
    for (Eigen::Index i = 0; i < cfg.n; ++i) d.y(i) = d.X.row(i).dot(cfg.true_params.beta) + step();
    d.intercept_included = false;
    for (Eigen::Index j = 0; j < M; ++j) d.column_names.push_back("x" + std::to_string(j + 1));
    return d;
}

/// Per-parameter summary of one method over the converged replications.
struct MethodSummary {
    Vector mean;   // length M + p + 1 (beta, phi, sigma2)
    Vector mse;
    Vector bias;
    int used = 0;      // converged replications entering the summary
    int failures = 0;  // non-converged replications (excluded)
};

struct SimulationReport {
    std::map<std::string, MethodSummary> methods;
    SimulationConfig config;
};

/// Componentwise mean, MSE and bias of stacked estimates against the truth.
inline MethodSummary mse_bias(const Matrix& estimates, const Vector& truth) {
    MethodSummary s;
    const auto reps = estimates.rows();
    s.used = static_cast<int>(reps);
    s.mean = estimates.colwise().mean();
    s.bias = s.mean - truth;
    const Matrix dev = estimates.rowwise() - truth.transpose();
    s.mse = dev.array().square().colwise().mean();
    return s;
}

/**
 * Monte Carlo study: per replication, generate a dataset and fit each
 * requested method from LS initial values; aggregate mean/MSE/bias over the
 * converged replications. Replications run in parallel; per-replication
 * seeds keep the report independent of execution order.
 */
inline SimulationReport run_study(const SimulationConfig& cfg, const CelOptions& cel_opts = {}) {
    cfg.validate();
    const auto M = cfg.true_params.beta.size();
    const auto p = cfg.true_params.p();
    const Eigen::Index k = M + p + 1;

    struct RepResult {
        std::map<std::string, std::pair<bool, Vector>> fits;
    };
    std::vector<RepResult> results(static_cast<std::size_t>(cfg.reps));

    auto run_rep = [&](int rep) {
        RegressionDataset d = generate_dataset(cfg, static_cast<std::uint64_t>(rep));
        RepResult rr;
        for (const auto& m : cfg.methods) {
            Vector est(k);
            bool ok = false;
            try {
                if (m == "cml") {
                    CmlFitResult f = cml_fit(d, p);
                    ok = f.converged;
                    est << f.params.beta, f.params.phi, f.params.sigma2;
                } else {
                    CelFitResult f = cel_fit(d, p, cel_opts);
                    ok = f.converged;
                    est << f.params.beta, f.params.phi, f.params.sigma2;
                }
            } catch (const std::exception&) {
                ok = false;
                est.setZero();
            }
            rr.fits[m] = {ok, est};
        }
        results[static_cast<std::size_t>(rep)] = std::move(rr);
    };

    int nthreads = cfg.threads > 0 ? cfg.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
    if (nthreads < 1) nthreads = 1;
    nthreads = std::min(nthreads, cfg.reps);
    if (nthreads == 1) {
        for (int rep = 0; rep < cfg.reps; ++rep) run_rep(rep);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < nthreads; ++w)
            pool.emplace_back([&, w] {
                for (int rep = w; rep < cfg.reps; rep += nthreads) run_rep(rep);
            });
        for (auto& t : pool) t.join();
    }

    Vector truth(k);
    truth << cfg.true_params.beta, cfg.true_params.phi, cfg.true_params.sigma2;

    SimulationReport report;
    report.config = cfg;
    for (const auto& m : cfg.methods) {
        std::vector<Vector> good;
        int failures = 0;
        for (const auto& rr : results) {
            const auto& [ok, est] = rr.fits.at(m);
            if (ok)
                good.push_back(est);
            else
                ++failures;
        }
        if (good.empty()) throw config_error("run_study: every replication failed for " + m);
        Matrix est(static_cast<Eigen::Index>(good.size()), k);
        for (std::size_t i = 0; i < good.size(); ++i)
            est.row(static_cast<Eigen::Index>(i)) = good[i].transpose();
        MethodSummary s = mse_bias(est, truth);
        s.failures = failures;
        report.methods[m] = std::move(s);
    }
    return report;
}

}  // namespace arel

#endif  // AREL_SIM_HPP
