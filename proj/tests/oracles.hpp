#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's numerical routines.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

namespace oracle
{

inline long double normal_pdf(long double x, long double mean, long double var)
{
    const long double r = x - mean;
    return std::exp(-r * r / (2.0L * var)) / std::sqrt(2.0L * std::numbers::pi_v<long double> * var);
}

/// Direct linear-space Bayes rule for one observation.
inline std::vector<long double> responsibilities(long double w, const std::vector<double> &pi,
                                                 const std::vector<double> &delta, const std::vector<double> &sigma2,
                                                 long double dt)
{
    std::vector<long double> num(pi.size());
    long double den = 0.0L;
    for (std::size_t j = 0; j < pi.size(); ++j)
    {
        num[j] = pi[j] * normal_pdf(w, delta[j] * dt, sigma2[j] * dt);
        den += num[j];
    }
    for (auto &v : num)
        v /= den;
    return num;
}

struct WeightedMoments
{
    long double weight = 0, mean = 0, var = 0;
};

inline WeightedMoments weighted_moments(const std::vector<double> &x, const std::vector<double> &weights)
{
    WeightedMoments m;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        m.weight += weights[i];
        m.mean += static_cast<long double>(weights[i]) * x[i];
    }
    m.mean /= m.weight;
    for (std::size_t i = 0; i < x.size(); ++i)
        m.var += weights[i] * (x[i] - m.mean) * (x[i] - m.mean);
    m.var /= m.weight;
    return m;
}

/*
 * Joint law of (number of real jumps, end state) of an MJP started in
 * `from` and run for `length`, by uniformization: virtual events arrive at
 * rate lambda >= max exit rate and move the chain with P = I + Q / lambda.
 * Returns P(N = n, X_length = to | X_0 = from) for n = 0..max_jumps, using
 * `terms` Poisson terms.
 */
inline std::vector<long double> jump_count_joint(const Eigen::MatrixXd &q, int from, int to, double length,
                                                 int terms = 30, int max_jumps = 30)
{
    const auto m = q.rows();
    double lambda = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        lambda = std::max(lambda, -q(i, i));
    const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(m, m) + q / lambda;

    // dist[n](i): probability of being in i with n real jumps after k virtual events
    std::vector<Eigen::VectorXd> dist(static_cast<std::size_t>(terms) + 1, Eigen::VectorXd::Zero(m));
    dist[0](from) = 1.0;
    std::vector<long double> out(static_cast<std::size_t>(max_jumps) + 1, 0.0L);
    long double poisson = std::exp(-static_cast<long double>(lambda * length));
    for (int k = 0; k <= terms; ++k)
    {
        if (k > 0)
        {
            poisson *= lambda * length / k;
            std::vector<Eigen::VectorXd> next(dist.size(), Eigen::VectorXd::Zero(m));
            for (std::size_t n = 0; n < dist.size(); ++n)
                for (Eigen::Index i = 0; i < m; ++i)
                {
                    if (dist[n](i) == 0.0)
                        continue;
                    next[n](i) += dist[n](i) * p(i, i);
                    if (n + 1 < dist.size())
                        for (Eigen::Index j = 0; j < m; ++j)
                            if (j != i)
                                next[n + 1](j) += dist[n](i) * p(i, j);
                }
            dist = std::move(next);
        }
        for (int n = 0; n <= std::min(k, max_jumps); ++n)
            out[static_cast<std::size_t>(n)] += poisson * dist[static_cast<std::size_t>(n)](to);
    }
    return out;
}

/// Conditional jump-count law given both endpoints.
inline std::vector<long double> bridge_jump_count_law(const Eigen::MatrixXd &q, int from, int to, double length,
                                                      int terms = 30)
{
    auto joint = jump_count_joint(q, from, to, length, terms, terms);
    long double total = 0.0L;
    for (auto v : joint)
        total += v;
    for (auto &v : joint)
        v /= total;
    return joint;
}

/// Stationary distribution: solves pi Q = 0 with sum(pi) = 1.
inline Eigen::VectorXd stationary(const Eigen::MatrixXd &q)
{
    const auto m = q.rows();
    Eigen::MatrixXd a(m + 1, m);
    a.topRows(m) = q.transpose();
    a.row(m).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m + 1);
    b(m) = 1.0;
    return a.colPivHouseholderQr().solve(b);
}

} // namespace oracle
