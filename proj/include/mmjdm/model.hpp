#pragma once

#include "mmjdm/error.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mmjdm
{

/// Absolute tolerance on the row sums of an intensity matrix.
inline constexpr double kRowSumTolerance = 1e-12;

/*
 * Generator of a finite-state Markov jump process.
 *
 * Off-diagonal entries are transition rates (per unit time), the diagonal
 * holds minus the total exit rate of each state. States are 0-based here;
 * everything that reads or writes files uses 1-based labels.
 */
class IntensityMatrix
{
public:
    IntensityMatrix() = default;

    /// Throws ValidationError naming the violated invariant.
    explicit IntensityMatrix(Eigen::MatrixXd rates) : rates_(std::move(rates))
    {
        if (auto why = violation(rates_))
            throw ValidationError("intensity matrix: " + *why);
    }

    /// Builds a generator from off-diagonal rates, setting q_ii = -sum_{j!=i} q_ij.
    static IntensityMatrix from_off_diagonal(const Eigen::MatrixXd &rates)
    {
        Eigen::MatrixXd q = rates;
        for (Eigen::Index i = 0; i < q.rows(); ++i)
        {
            q(i, i) = 0.0;
            double exit = 0.0;
            for (Eigen::Index j = 0; j < q.cols(); ++j)
                if (j != i)
                    exit += q(i, j);
            q(i, i) = -exit;
        }
        return IntensityMatrix(std::move(q));
    }

    /// First violated invariant of a candidate generator, if any.
    static std::optional<std::string> violation(const Eigen::MatrixXd &q)
    {
        if (q.rows() < 1 || q.rows() != q.cols())
            return "state count: matrix must be square with m >= 1";
        if (!q.allFinite())
            return "non-finite rate";
        for (Eigen::Index i = 0; i < q.rows(); ++i)
        {
            for (Eigen::Index j = 0; j < q.cols(); ++j)
                if (i != j && q(i, j) < 0.0)
                    return "negative off-diagonal rate at (" + std::to_string(i + 1) + "," +
                           std::to_string(j + 1) + ")";
            if (q(i, i) > 0.0)
                return "positive diagonal at row " + std::to_string(i + 1);
            if (std::abs(q.row(i).sum()) > kRowSumTolerance)
                return "row sum nonzero at row " + std::to_string(i + 1);
        }
        return std::nullopt;
    }

    int states() const { return static_cast<int>(rates_.rows()); }
    double operator()(int i, int j) const { return rates_(i, j); }
    double exit_rate(int i) const { return -rates_(i, i); }
    const Eigen::MatrixXd &rates() const { return rates_; }

    /// Largest absolute row sum.
    double max_row_sum() const { return rates_.rowwise().sum().cwiseAbs().maxCoeff(); }

private:
    Eigen::MatrixXd rates_;
};

/// Regular sampling grid t_i = i * delta, i = 0..intervals.
struct ObservationGrid
{
    double delta = 1.0;
    int intervals = 1;

    double horizon() const { return delta * intervals; }
    double time(int i) const { return delta * i; }
};

/// Full parameter bundle of the Markov-modulated jump diffusion, in per-unit-time rates.
struct MmjdmParams
{
    IntensityMatrix q;
    std::vector<double> mu;
    std::vector<double> sigma;
    double eta = 1.0; ///< rate of the Laplace log-jump law, mean |J| = 1/eta
    double s0 = 100.0;
    int x0 = 0; ///< initial environment state, 0-based

    int states() const { return q.states(); }
};

/// Piecewise-constant environment trajectory on [0, horizon].
struct MjpPath
{
    int initial_state = 0;
    std::vector<double> jump_times;
    std::vector<int> post_jump_states;
    double horizon = 0.0;

    std::size_t jumps() const { return jump_times.size(); }

    int final_state() const
    {
        return post_jump_states.empty() ? initial_state : post_jump_states.back();
    }

    int state_at(double t) const
    {
        int state = initial_state;
        for (std::size_t k = 0; k < jump_times.size() && jump_times[k] <= t; ++k)
            state = post_jump_states[k];
        return state;
    }
};

enum class VolatilityRule
{
    strictly_positive, ///< estimation models
    nonnegative,       ///< simulation also accepts degenerate sigma = 0
};

inline std::optional<std::string> find_violation(const MmjdmParams &p,
                                                 VolatilityRule rule = VolatilityRule::strictly_positive)
{
    if (auto why = IntensityMatrix::violation(p.q.rates()))
        return why;
    const auto m = static_cast<std::size_t>(p.states());
    if (p.mu.size() != m)
        return "mu length differs from state count";
    if (p.sigma.size() != m)
        return "sigma length differs from state count";
    for (double v : p.mu)
        if (!std::isfinite(v))
            return "non-finite drift";
    for (double s : p.sigma)
    {
        if (!std::isfinite(s))
            return "non-finite volatility";
        if (rule == VolatilityRule::strictly_positive ? !(s > 0.0) : !(s >= 0.0))
            return "nonpositive volatility";
    }
    if (!(p.eta > 0.0) || !std::isfinite(p.eta))
        return "nonpositive eta";
    if (!(p.s0 > 0.0) || !std::isfinite(p.s0))
        return "nonpositive initial price";
    if (p.x0 < 0 || p.x0 >= p.states())
        return "initial state out of range";
    return std::nullopt;
}

inline void validate(const MmjdmParams &p, VolatilityRule rule = VolatilityRule::strictly_positive)
{
    if (auto why = find_violation(p, rule))
        throw ValidationError("parameters: " + *why);
}

inline void validate(const ObservationGrid &g)
{
    if (!(g.delta > 0.0) || !std::isfinite(g.delta))
        throw ValidationError("grid: nonpositive sampling interval");
    if (g.intervals < 1)
        throw ValidationError("grid: need at least one interval");
}

/// Log-price drift of a regime, mu - sigma^2 / 2.
constexpr double delta_drift(double mu, double sigma) { return mu - 0.5 * sigma * sigma; }

/// Inverse of delta_drift for a known variance.
constexpr double drift_from_delta(double delta, double sigma2) { return delta + 0.5 * sigma2; }

/*
 * Three-regime daily reference parameters: yearly rates rescaled by 252
 * trading days. Entries are exact fractions so that rows sum to zero.
 */
inline MmjdmParams reference_parameters()
{
    Eigen::MatrixXd q(3, 3);
    q << -1.0 / 378.0, 1.0 / 432.0, 1.0 / 3024.0,
        1.0 / 252.0, -1.0 / 168.0, 1.0 / 504.0,
        1.0 / 168.0, 1.0 / 504.0, -1.0 / 126.0;
    MmjdmParams p;
    p.q = IntensityMatrix::from_off_diagonal(q);
    p.mu = {1.0 / 168.0, 1.0 / 840.0, -1.0 / 1008.0};
    p.sigma = {0.15 / std::sqrt(252.0), std::sqrt(0.08) / std::sqrt(252.0), 0.35 / std::sqrt(252.0)};
    p.eta = 250.0 / 33.0;
    p.s0 = 100.0;
    p.x0 = 0;
    return p;
}

} // namespace mmjdm
