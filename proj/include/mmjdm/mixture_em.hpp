#pragma once

#include "mmjdm/error.hpp"
#include "mmjdm/model.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace mmjdm
{

/*
 * Parameters of the Gaussian mixture fitted to diffusion-only yields.
 * Component j generates N(delta_j * dt, sigma2_j * dt); delta and sigma2 are
 * stored per unit time.
 */
struct MixtureState
{
    std::vector<double> pi;
    std::vector<double> delta;
    std::vector<double> sigma2;
    double objective = std::numeric_limits<double>::quiet_NaN();

    int components() const { return static_cast<int>(pi.size()); }
};

/// gamma(n, j) = P(component j | w_n); rows sum to one.
struct Responsibilities
{
    Eigen::MatrixXd gamma;
};

inline double log_component_density(double w, double delta, double sigma2, double dt)
{
    const double var = sigma2 * dt;
    const double r = w - delta * dt;
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * r * r / var;
}

inline double component_density(double w, double delta, double sigma2, double dt)
{
    return std::exp(log_component_density(w, delta, sigma2, dt));
}

namespace detail
{
inline void check_state(const MixtureState &s)
{
    const auto m = s.pi.size();
    if (m == 0 || s.delta.size() != m || s.sigma2.size() != m)
        throw ValidationError("mixture state: inconsistent component counts");
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j)
    {
        if (!(s.pi[j] >= 0.0))
            throw ValidationError("mixture state: negative weight");
        if (!(s.sigma2[j] > 0.0) || !std::isfinite(s.sigma2[j]))
            throw ValidationError("mixture state: nonpositive variance");
        total += s.pi[j];
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ValidationError("mixture state: weights do not sum to one");
}

/// log(pi_j) + log f_j(w) for every component.
inline void log_joint(double w, const MixtureState &s, double dt, std::span<double> out)
{
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = std::log(s.pi[j]) + log_component_density(w, s.delta[j], s.sigma2[j], dt);
}

inline double log_sum_exp(std::span<const double> v)
{
    const double top = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(top))
        return top;
    double acc = 0.0;
    for (double x : v)
        acc += std::exp(x - top);
    return top + std::log(acc);
}
} // namespace detail

inline Responsibilities e_step(std::span<const double> w, const MixtureState &state, double dt)
{
    detail::check_state(state);
    const auto m = static_cast<std::size_t>(state.components());
    Responsibilities out;
    out.gamma.resize(static_cast<Eigen::Index>(w.size()), static_cast<Eigen::Index>(m));
    std::vector<double> lj(m);
    for (std::size_t n = 0; n < w.size(); ++n)
    {
        detail::log_joint(w[n], state, dt, lj);
        const double top = *std::max_element(lj.begin(), lj.end());
        if (!std::isfinite(top))
            throw NumericalError("e_step: all component densities vanish at observation " +
                                 std::to_string(n + 1));
        // Shift by the largest term and normalise in linear space.
        double total = 0.0;
        for (auto &v : lj)
        {
            v = std::exp(v - top);
            total += v;
        }
        for (std::size_t j = 0; j < m; ++j)
            out.gamma(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) = lj[j] / total;
    }
    return out;
}

/// Minimum total responsibility a component needs to be re-estimated.
inline constexpr double kEmptyComponentMass = 1e-10;

inline MixtureState m_step(std::span<const double> w, const Responsibilities &resp, double dt)
{
    const auto &g = resp.gamma;
    if (static_cast<std::size_t>(g.rows()) != w.size() || g.cols() < 1)
        throw ValidationError("m_step: responsibilities do not match observations");
    const auto m = static_cast<std::size_t>(g.cols());
    const double n_obs = static_cast<double>(w.size());

    MixtureState out;
    out.pi.resize(m);
    out.delta.resize(m);
    out.sigma2.resize(m);
    for (std::size_t j = 0; j < m; ++j)
    {
        const auto col = static_cast<Eigen::Index>(j);
        double mass = 0.0;
        double first = 0.0;
        for (std::size_t n = 0; n < w.size(); ++n)
        {
            const double gj = g(static_cast<Eigen::Index>(n), col);
            mass += gj;
            first += gj * w[n];
        }
        if (mass < kEmptyComponentMass)
            throw NumericalError("empty component " + std::to_string(j + 1) +
                                 " (total responsibility " + std::to_string(mass) + ")");
        const double mean = first / mass;
        double second = 0.0;
        for (std::size_t n = 0; n < w.size(); ++n)
        {
            const double r = w[n] - mean;
            second += g(static_cast<Eigen::Index>(n), col) * r * r;
        }
        const double var = second / mass;
        if (!(var > 0.0))
            throw NumericalError("component " + std::to_string(j + 1) + " collapsed to zero variance");
        out.pi[j] = mass / n_obs;
        out.delta[j] = mean / dt;
        out.sigma2[j] = var / dt;
    }
    return out;
}

/// Expected complete-data log-likelihood sum_n sum_j gamma_nj [log pi_j + log f_j(w_n)].
inline double surrogate(std::span<const double> w, const Responsibilities &resp, const MixtureState &state,
                        double dt)
{
    const auto m = static_cast<std::size_t>(state.components());
    double total = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n)
        for (std::size_t j = 0; j < m; ++j)
        {
            const double gj = resp.gamma(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j));
            if (gj > 0.0)
                total += gj * (std::log(state.pi[j]) +
                               log_component_density(w[n], state.delta[j], state.sigma2[j], dt));
        }
    return total;
}

/// Observed-data log-likelihood sum_n log sum_j pi_j f_j(w_n).
inline double observed_log_likelihood(std::span<const double> w, const MixtureState &state, double dt)
{
    std::vector<double> lj(static_cast<std::size_t>(state.components()));
    double total = 0.0;
    for (double x : w)
    {
        detail::log_joint(x, state, dt, lj);
        total += detail::log_sum_exp(lj);
    }
    return total;
}

/// Builds a mixture state from per-unit-time drifts and volatilities.
inline MixtureState mixture_from_moments(std::vector<double> pi, std::span<const double> mu,
                                         std::span<const double> sigma)
{
    MixtureState s;
    s.pi = std::move(pi);
    for (std::size_t j = 0; j < mu.size(); ++j)
    {
        s.delta.push_back(delta_drift(mu[j], sigma[j]));
        s.sigma2.push_back(sigma[j] * sigma[j]);
    }
    detail::check_state(s);
    return s;
}

/*
 * Deterministic starting point: sort the yields, cut them into m equal
 * quantile blocks and take each block's mean and variance with equal weights.
 */
inline MixtureState default_initial_state(std::span<const double> w, int m, double dt)
{
    if (m < 1)
        throw ValidationError("mixture: need at least one component");
    const auto comps = static_cast<std::size_t>(m);
    if (w.size() < 2 * comps)
        throw ValidationError("mixture: need at least two observations per component");

    std::vector<double> sorted(w.begin(), w.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    const double global_mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    double global_var = 0.0;
    for (double x : sorted)
        global_var += (x - global_mean) * (x - global_mean);
    global_var /= n;
    if (!(global_var > 0.0))
        throw ValidationError("mixture: observations have zero variance");

    MixtureState s;
    for (std::size_t j = 0; j < comps; ++j)
    {
        const auto lo = j * sorted.size() / comps;
        const auto hi = (j + 1) * sorted.size() / comps;
        const double len = static_cast<double>(hi - lo);
        double mean = 0.0;
        for (auto k = lo; k < hi; ++k)
            mean += sorted[k];
        mean /= len;
        double var = 0.0;
        for (auto k = lo; k < hi; ++k)
            var += (sorted[k] - mean) * (sorted[k] - mean);
        var = std::max(var / len, 1e-6 * global_var);
        s.pi.push_back(1.0 / static_cast<double>(comps));
        s.delta.push_back(mean / dt);
        s.sigma2.push_back(var / dt);
    }
    return s;
}

struct EmOptions
{
    double eps = 0.05;
    int max_iter = 1000;
};

struct EmResult
{
    MixtureState final_state; ///< components in ascending-volatility order
    std::vector<double> mu_hat;
    std::vector<double> sigma_hat;
    int iterations = 0;
    bool converged = false;
    std::vector<double> loglik_trace;   ///< index 0 is the initial state
    std::vector<double> surrogate_trace; ///< surrogate after each M-step
};

/// Reorders components by ascending variance (ties keep their order).
inline MixtureState sort_by_volatility(const MixtureState &s)
{
    std::vector<std::size_t> order(s.pi.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s.sigma2[a] < s.sigma2[b]; });
    MixtureState out;
    out.objective = s.objective;
    for (auto j : order)
    {
        out.pi.push_back(s.pi[j]);
        out.delta.push_back(s.delta[j]);
        out.sigma2.push_back(s.sigma2[j]);
    }
    return out;
}

/*
 * EM for the diffusion-yield mixture. Each iteration computes responsibilities
 * under the current parameters, re-estimates the parameters, and stops once
 * the surrogate moves by less than eps between the old and the new parameters.
 */
inline EmResult run_em(std::span<const double> w, const MixtureState &init, double dt,
                       const EmOptions &options = {})
{
    if (!(options.eps > 0.0))
        throw ValidationError("run_em: tolerance must be positive");
    if (options.max_iter < 1)
        throw ValidationError("run_em: max_iter must be at least 1");
    if (!(dt > 0.0))
        throw ValidationError("run_em: nonpositive sampling interval");
    if (w.empty())
        throw ValidationError("run_em: no observations");
    detail::check_state(init);

    EmResult out;
    MixtureState state = init;
    out.loglik_trace.push_back(observed_log_likelihood(w, state, dt));
    for (int it = 1; it <= options.max_iter; ++it)
    {
        const Responsibilities resp = e_step(w, state, dt);
        const double before = surrogate(w, resp, state, dt);
        MixtureState next = m_step(w, resp, dt);
        next.objective = surrogate(w, resp, next, dt);
        out.surrogate_trace.push_back(next.objective);
        out.loglik_trace.push_back(observed_log_likelihood(w, next, dt));
        state = std::move(next);
        out.iterations = it;
        if (std::abs(state.objective - before) < options.eps)
        {
            out.converged = true;
            break;
        }
    }

    out.final_state = sort_by_volatility(state);
    for (std::size_t j = 0; j < out.final_state.pi.size(); ++j)
    {
        out.mu_hat.push_back(drift_from_delta(out.final_state.delta[j], out.final_state.sigma2[j]));
        out.sigma_hat.push_back(std::sqrt(out.final_state.sigma2[j]));
    }
    return out;
}

} // namespace mmjdm
