#pragma once

#include "mmjdm/model.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace mmjdm
{

struct SimulatedPath
{
    std::vector<double> prices; ///< one per grid time, prices[0] = s0
    MjpPath latent;
    std::vector<double> jump_log_sizes; ///< J_k, aligned with latent.jump_times
};

struct SimulationOptions
{
    /// Test hook: keep the regime switches but do not move the price at them.
    bool suppress_price_jumps = false;
};

/*
 * Gillespie construction of an MJP on [0, horizon]. Holding time in state i
 * is Exponential(-q_ii); the next state is drawn with weights q_ij. A state
 * with zero exit rate is absorbing.
 */
template <class Gen>
MjpPath simulate_mjp(const IntensityMatrix &q, int x0, double horizon, Gen &rng)
{
    if (!(horizon > 0.0))
        throw ValidationError("simulate_mjp: horizon must be positive");
    if (x0 < 0 || x0 >= q.states())
        throw ValidationError("simulate_mjp: initial state out of range");

    MjpPath path;
    path.initial_state = x0;
    path.horizon = horizon;

    const int m = q.states();
    std::vector<double> weights(static_cast<std::size_t>(m));
    int state = x0;
    double t = 0.0;
    for (;;)
    {
        const double exit = q.exit_rate(state);
        if (!(exit > 0.0))
            break;
        t += std::exponential_distribution<double>(exit)(rng);
        if (t >= horizon)
            break;
        for (int j = 0; j < m; ++j)
            weights[static_cast<std::size_t>(j)] = j == state ? 0.0 : q(state, j);
        state = std::discrete_distribution<int>(weights.begin(), weights.end())(rng);
        path.jump_times.push_back(t);
        path.post_jump_states.push_back(state);
    }
    return path;
}

/// Symmetric Laplace draw with rate eta: |J| ~ Exponential(eta).
template <class Gen>
double sample_laplace_jump(double eta, Gen &rng)
{
    const double magnitude = std::exponential_distribution<double>(eta)(rng);
    return std::bernoulli_distribution(0.5)(rng) ? magnitude : -magnitude;
}

/*
 * Exact simulation of the price on a regular grid. Between event times
 * (grid points and environment switches) the log-price moves by
 * delta_j * dt + sigma_j * sqrt(dt) * Z in the current regime j; each
 * environment switch multiplies the price by exp(J_k).
 */
template <class Gen>
SimulatedPath simulate_mmjdm(const MmjdmParams &params, const ObservationGrid &grid, Gen &rng,
                             const SimulationOptions &options = {})
{
    validate(params, VolatilityRule::nonnegative);
    validate(grid);

    SimulatedPath out;
    out.latent = simulate_mjp(params.q, params.x0, grid.horizon(), rng);
    const MjpPath &latent = out.latent;
    out.jump_log_sizes.reserve(latent.jumps());
    for (std::size_t k = 0; k < latent.jumps(); ++k)
    {
        const double j = sample_laplace_jump(params.eta, rng);
        out.jump_log_sizes.push_back(options.suppress_price_jumps ? 0.0 : j);
    }

    std::normal_distribution<double> normal;
    auto diffuse = [&](int state, double dt) {
        const auto s = static_cast<std::size_t>(state);
        return delta_drift(params.mu[s], params.sigma[s]) * dt +
               params.sigma[s] * std::sqrt(dt) * normal(rng);
    };

    out.prices.resize(static_cast<std::size_t>(grid.intervals) + 1);
    out.prices[0] = params.s0;
    double log_return = 0.0; // log(S_t / s0)
    int state = latent.initial_state;
    std::size_t next = 0;
    for (int i = 1; i <= grid.intervals; ++i)
    {
        double now = grid.time(i - 1);
        const double end = grid.time(i);
        while (next < latent.jumps() && latent.jump_times[next] < end)
        {
            const double tau = latent.jump_times[next];
            log_return += diffuse(state, tau - now);
            log_return += out.jump_log_sizes[next];
            state = latent.post_jump_states[next];
            now = tau;
            ++next;
        }
        log_return += diffuse(state, end - now);
        out.prices[static_cast<std::size_t>(i)] = params.s0 * std::exp(log_return);
    }
    return out;
}

} // namespace mmjdm
