#pragma once

#include "mmjdm/error.hpp"
#include "mmjdm/model.hpp"
#include "mmjdm/random.hpp"
#include "mmjdm/segmentation.hpp"

#include <Eigen/Core>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace mmjdm
{

/// Transition counts N_ij and occupation times R_i of an environment path.
/// Counts are whole numbers for a single path and fractional once averaged.
struct SufficientStats
{
    Eigen::MatrixXd n_jumps;
    Eigen::VectorXd occupation;

    explicit SufficientStats(int m = 0)
        : n_jumps(Eigen::MatrixXd::Zero(m, m)), occupation(Eigen::VectorXd::Zero(m))
    {
    }

    int states() const { return static_cast<int>(occupation.size()); }
    double total_time() const { return occupation.sum(); }

    void add_occupation(int state, double time) { occupation(state) += time; }

    void add(const MjpPath &path)
    {
        double t = 0.0;
        int state = path.initial_state;
        for (std::size_t k = 0; k < path.jumps(); ++k)
        {
            occupation(state) += path.jump_times[k] - t;
            n_jumps(state, path.post_jump_states[k]) += 1.0;
            t = path.jump_times[k];
            state = path.post_jump_states[k];
        }
        occupation(state) += path.horizon - t;
    }
};

inline bool reachable(const IntensityMatrix &q, int from, int to)
{
    const int m = q.states();
    std::vector<bool> seen(static_cast<std::size_t>(m), false);
    std::vector<int> stack{from};
    seen[static_cast<std::size_t>(from)] = true;
    while (!stack.empty())
    {
        const int i = stack.back();
        stack.pop_back();
        if (i == to)
            return true;
        for (int j = 0; j < m; ++j)
            if (j != i && q(i, j) > 0.0 && !seen[static_cast<std::size_t>(j)])
            {
                seen[static_cast<std::size_t>(j)] = true;
                stack.push_back(j);
            }
    }
    return false;
}

struct BridgeOptions
{
    std::int64_t max_attempts = 1'000'000;
};

namespace detail
{
template <class Gen>
int next_state(const IntensityMatrix &q, int state, Gen &rng)
{
    const int m = q.states();
    std::vector<double> weights(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
        weights[static_cast<std::size_t>(j)] = j == state ? 0.0 : q(state, j);
    return std::discrete_distribution<int>(weights.begin(), weights.end())(rng);
}

/// Forward simulation on (start, length] continuing from `state`, appending to `path`.
template <class Gen>
void continue_forward(const IntensityMatrix &q, int state, double start, double length, MjpPath &path, Gen &rng)
{
    double t = start;
    for (;;)
    {
        const double exit = q.exit_rate(state);
        if (!(exit > 0.0))
            return;
        t += std::exponential_distribution<double>(exit)(rng);
        if (t >= length)
            return;
        state = next_state(q, state, rng);
        path.jump_times.push_back(t);
        path.post_jump_states.push_back(state);
    }
}
} // namespace detail

/*
 * Markov bridge from x_start to x_end over [0, length] by rejection: draw
 * forward paths and keep the first that ends in x_end. When the endpoints
 * differ at least one jump is certain, so the first jump time is drawn from
 * its law truncated to [0, length]; the accepted path is still an exact
 * draw from the bridge law, only with far fewer rejections.
 */
template <class Gen>
MjpPath sample_bridge(const IntensityMatrix &q, int x_start, int x_end, double length, Gen &rng,
                      const BridgeOptions &options = {})
{
    const int m = q.states();
    if (x_start < 0 || x_start >= m || x_end < 0 || x_end >= m)
        throw ValidationError("sample_bridge: endpoint state out of range");
    if (!(length > 0.0))
        throw ValidationError("sample_bridge: bridge length must be positive");

    auto stalled = [&](std::int64_t attempts) {
        std::ostringstream msg;
        msg << "bridge rejection stalled: endpoints (" << x_start + 1 << " -> " << x_end + 1
            << ") over length " << length << ", acceptance estimate < " << 1.0 / static_cast<double>(attempts)
            << " after " << attempts << " attempts";
        return NumericalError(msg.str());
    };
    if (x_start != x_end && !reachable(q, x_start, x_end))
        throw stalled(1);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double exit = q.exit_rate(x_start);
    for (std::int64_t attempt = 1; attempt <= options.max_attempts; ++attempt)
    {
        MjpPath path;
        path.initial_state = x_start;
        path.horizon = length;
        if (x_start == x_end)
        {
            detail::continue_forward(q, x_start, 0.0, length, path, rng);
        }
        else
        {
            // Inverse CDF of Exponential(exit) truncated to [0, length].
            const double tau = -std::log1p(unit(rng) * std::expm1(-exit * length)) / exit;
            if (!(tau < length))
                continue;
            const int next = detail::next_state(q, x_start, rng);
            path.jump_times.push_back(tau);
            path.post_jump_states.push_back(next);
            detail::continue_forward(q, next, tau, length, path, rng);
        }
        if (path.final_state() == x_end)
            return path;
    }
    throw stalled(options.max_attempts);
}

/// Statistics of a partially observed path completed by one bridge per gap.
inline SufficientStats stats_from_path(const PartialMjpPath &partial, const std::vector<MjpPath> &bridges, int m)
{
    if (bridges.size() != partial.gaps.size())
        throw ValidationError("stats_from_path: need one bridge per gap");
    SufficientStats stats(m);
    for (const auto &seg : partial.segments)
        stats.add_occupation(seg.state, seg.length());
    for (const auto &b : bridges)
        stats.add(b);
    return stats;
}

struct QEstimate
{
    IntensityMatrix q;
    std::vector<int> unvisited_states; ///< rows set to zero because R_i = 0
};

/// Closed-form MLE q_ij = N_ij / R_i, q_ii = -sum_{j!=i} q_ij.
inline QEstimate mle_q(const SufficientStats &stats)
{
    const int m = stats.states();
    Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(m, m);
    QEstimate out;
    for (int i = 0; i < m; ++i)
    {
        double outgoing = 0.0;
        for (int j = 0; j < m; ++j)
            if (j != i)
                outgoing += stats.n_jumps(i, j);
        if (!(stats.occupation(i) > 0.0))
        {
            if (outgoing > 0.0)
                throw NumericalError("occupation zero with observed jumps in state " + std::to_string(i + 1));
            out.unvisited_states.push_back(i);
            continue;
        }
        for (int j = 0; j < m; ++j)
            if (j != i)
                rates(i, j) = stats.n_jumps(i, j) / stats.occupation(i);
    }
    out.q = IntensityMatrix::from_off_diagonal(rates);
    return out;
}

struct ConfidenceBounds
{
    Eigen::MatrixXd lower;
    Eigen::MatrixXd upper;
    Eigen::MatrixX<bool> degenerate; ///< off-diagonals with no observed transitions
};

namespace detail
{
inline double two_sided_z(double level)
{
    if (!(level > 0.0 && level < 1.0))
        throw ValidationError("confidence level must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 * (1.0 + level));
}

/// Normal intervals center_ij +- z * center_ij / sqrt(N_ij), floored at zero.
inline ConfidenceBounds rate_intervals(const Eigen::MatrixXd &center, const Eigen::MatrixXd &counts, double level)
{
    const double z = two_sided_z(level);
    const auto m = center.rows();
    ConfidenceBounds ci{Eigen::MatrixXd::Zero(m, m), Eigen::MatrixXd::Zero(m, m),
                        Eigen::MatrixX<bool>::Constant(m, m, false)};
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
        {
            if (i == j)
                continue;
            if (!(counts(i, j) > 0.0))
            {
                ci.degenerate(i, j) = true;
                continue;
            }
            const double half = z * center(i, j) / std::sqrt(counts(i, j));
            ci.lower(i, j) = std::max(0.0, center(i, j) - half);
            ci.upper(i, j) = center(i, j) + half;
        }
    return ci;
}
} // namespace detail

/// Fisher-information intervals for the off-diagonal rates: var(q_ij) ~ q_ij^2 / N_ij.
inline ConfidenceBounds fisher_ci(const SufficientStats &stats, double level)
{
    const QEstimate est = mle_q(stats);
    return detail::rate_intervals(est.q.rates(), stats.n_jumps, level);
}

struct SemOptions
{
    int iterations = 1000;
    int burn_in = -1; ///< negative: 20% of iterations
    double ci_level = 0.95;
    double rate_floor = 1e-8;
    BridgeOptions bridge;
};

struct SemResult
{
    IntensityMatrix q_hat; ///< mean of the post-burn-in iterates
    std::vector<Eigen::MatrixXd> trace;
    std::vector<SufficientStats> stats_trace;
    SufficientStats mean_stats;
    Eigen::MatrixXd ci_lower;
    Eigen::MatrixXd ci_upper;
    Eigen::MatrixX<bool> ci_degenerate;
    Eigen::MatrixXd trace_sd;
    double ci_level = 0.95;
    int iterations_used = 0;
    int burn_in = 0;
    std::vector<int> unvisited_states;
};

/// Copy of q with every off-diagonal rate raised to at least `floor`.
inline IntensityMatrix floored(const IntensityMatrix &q, double floor)
{
    Eigen::MatrixXd r = q.rates();
    for (Eigen::Index i = 0; i < r.rows(); ++i)
        for (Eigen::Index j = 0; j < r.cols(); ++j)
            if (i != j)
                r(i, j) = std::max(r(i, j), floor);
    return IntensityMatrix::from_off_diagonal(r);
}

/*
 * Stochastic EM for the generator. Every iteration bridges all gaps under
 * the current iterate, collects N_ij and R_i over segments plus bridges and
 * takes the closed-form MLE. Bridge (iteration it, gap g) draws from its own
 * stream split from `seed`, so results depend only on the seed and the gap
 * order.
 */
inline SemResult run_sem(const PartialMjpPath &partial, const IntensityMatrix &q0, std::uint64_t seed,
                         const SemOptions &options = {})
{
    const int m = q0.states();
    const int burn_in = options.burn_in < 0 ? options.iterations / 5 : options.burn_in;
    if (options.iterations < 1 || burn_in >= options.iterations)
        throw ValidationError("run_sem: need iterations > burn_in >= 0");
    if (partial.segments.empty())
        throw ValidationError("run_sem: partial path has no observed segment");
    for (const auto &s : partial.segments)
        if (s.state < 0 || s.state >= m)
            throw ValidationError("run_sem: segment state outside the generator's state space");
    for (std::size_t g = 0; g < partial.gaps.size(); ++g)
    {
        const Gap &gap = partial.gaps[g];
        if (gap.left_state != gap.right_state && !reachable(q0, gap.left_state, gap.right_state))
            throw ValidationError("run_sem: gap " + std::to_string(g + 1) + " endpoints (" +
                                  std::to_string(gap.left_state + 1) + " -> " +
                                  std::to_string(gap.right_state + 1) + ") unreachable under the initial generator");
    }

    SufficientStats observed(m);
    for (const auto &seg : partial.segments)
        observed.add_occupation(seg.state, seg.length());

    SemResult out;
    out.burn_in = burn_in;
    out.ci_level = options.ci_level;
    IntensityMatrix current = q0;
    for (int it = 0; it < options.iterations; ++it)
    {
        const IntensityMatrix sampler = m > 1 ? floored(current, options.rate_floor) : current;
        SufficientStats stats = observed;
        for (std::size_t g = 0; g < partial.gaps.size(); ++g)
        {
            const Gap &gap = partial.gaps[g];
            Rng rng = split_stream(seed, {static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(g)});
            try
            {
                stats.add(sample_bridge(sampler, gap.left_state, gap.right_state, gap.length(), rng, options.bridge));
            }
            catch (const NumericalError &e)
            {
                throw NumericalError("sem iteration " + std::to_string(it + 1) + ", gap " + std::to_string(g + 1) +
                                     " [" + std::to_string(gap.start) + ", " + std::to_string(gap.end) + "]: " +
                                     e.what());
            }
        }
        QEstimate est = mle_q(stats);
        current = est.q;
        out.trace.push_back(current.rates());
        out.stats_trace.push_back(std::move(stats));
        out.unvisited_states = std::move(est.unvisited_states);
    }
    out.iterations_used = options.iterations;

    const auto kept = static_cast<double>(options.iterations - burn_in);
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(m, m);
    out.mean_stats = SufficientStats(m);
    for (std::size_t it = static_cast<std::size_t>(burn_in); it < out.trace.size(); ++it)
    {
        mean += out.trace[it];
        out.mean_stats.n_jumps += out.stats_trace[it].n_jumps;
        out.mean_stats.occupation += out.stats_trace[it].occupation;
    }
    mean /= kept;
    out.mean_stats.n_jumps /= kept;
    out.mean_stats.occupation /= kept;
    out.q_hat = IntensityMatrix::from_off_diagonal(mean);

    out.trace_sd = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t it = static_cast<std::size_t>(burn_in); it < out.trace.size(); ++it)
        out.trace_sd += (out.trace[it] - mean).cwiseAbs2();
    out.trace_sd = (out.trace_sd / kept).cwiseSqrt();

    ConfidenceBounds ci = detail::rate_intervals(out.q_hat.rates(), out.mean_stats.n_jumps, options.ci_level);
    out.ci_lower = std::move(ci.lower);
    out.ci_upper = std::move(ci.upper);
    out.ci_degenerate = std::move(ci.degenerate);
    return out;
}

} // namespace mmjdm
