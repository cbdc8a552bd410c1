#ifndef AREL_TESTS_HELPERS_HPP
#define AREL_TESTS_HELPERS_HPP

#include <random>

#include "arel/arel.hpp"

namespace arel::testing {

/// Deterministic random dataset with AR(p) errors for small test instances.
inline RegressionDataset random_dataset(std::uint64_t seed, Eigen::Index n, Eigen::Index m,
                                        const Vector& phi, double sigma = 1.0,
                                        const Vector* beta = nullptr) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> norm(0.0, 1.0);
    RegressionDataset d;
    d.X.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) d.X(i, j) = norm(rng);
    Vector b = beta ? *beta : [&] {
        Vector v(m);
        for (Eigen::Index j = 0; j < m; ++j) v(j) = norm(rng);
        return v;
    }();
    const auto p = phi.size();
    std::vector<double> lags(static_cast<std::size_t>(p), 0.0);
    auto step = [&]() {
        double e = sigma * norm(rng);
        for (Eigen::Index j = 0; j < p; ++j) e += phi(j) * lags[static_cast<std::size_t>(j)];
        for (Eigen::Index j = p - 1; j > 0; --j)
            lags[static_cast<std::size_t>(j)] = lags[static_cast<std::size_t>(j - 1)];
        if (p > 0) lags[0] = e;
        return e;
    };
    for (int t = 0; t < 100; ++t) (void)step();
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) d.y(i) = d.X.row(i).dot(b) + step();
    return d;
}

inline Vector make_vector(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

}  // namespace arel::testing

#endif  // AREL_TESTS_HELPERS_HPP
