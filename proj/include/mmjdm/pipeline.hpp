#pragma once

#include "mmjdm/io.hpp"
#include "mmjdm/mixture_em.hpp"
#include "mmjdm/random.hpp"
#include "mmjdm/segmentation.hpp"
#include "mmjdm/sem.hpp"
#include "mmjdm/yields.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mmjdm
{

struct EstimateConfig
{
    int states = 3;
    double threshold = 0.0; ///< absolute log-yield threshold U
    double delta = 1.0;
    EmOptions em;
    std::optional<MixtureState> em_init;
    SemOptions sem;
    std::optional<IntensityMatrix> q_init;
    std::uint64_t seed = 0;
};

struct EstimateReport
{
    std::size_t observations = 0; ///< number of yields M
    double delta = 1.0;
    JumpPartition partition;
    double eta_hat = 0.0;
    EmResult em;
    std::vector<Cluster> clusters;
    std::vector<int> labels;
    PartialMjpPath partial;
    IntensityMatrix q_init;
    SemResult sem;
    std::vector<std::string> warnings;
};

/// Uniform start for the generator: every off-diagonal rate equal to the
/// observed gap frequency spread over the other m-1 states.
inline IntensityMatrix default_generator(const PartialMjpPath &partial, int m)
{
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
    if (m > 1)
    {
        const double span = partial.covered_length() > 0.0 ? partial.covered_length() : 1.0;
        const double gaps = static_cast<double>(std::max<std::size_t>(partial.gaps.size(), 1));
        r.setConstant(gaps / (span * (m - 1)));
    }
    return IntensityMatrix::from_off_diagonal(r);
}

namespace detail
{
template <class F>
auto run_stage(const char *name, F &&f)
{
    try
    {
        return f();
    }
    catch (const ValidationError &e)
    {
        throw ValidationError(std::string(name) + ": " + e.what());
    }
    catch (const NumericalError &e)
    {
        throw NumericalError(std::string(name) + ": " + e.what());
    }
}
} // namespace detail

/*
 * Runs the four estimation stages in order:
 *   1. log-yields and threshold jump detection,
 *   2. jump-rate MLE,
 *   3. mixture EM for drifts and volatilities on the diffusion yields,
 *   4. cluster classification and stochastic EM for the generator.
 */
inline EstimateReport run_estimate(std::span<const double> prices, const EstimateConfig &config)
{
    if (config.states < 1)
        throw ValidationError("need at least one state");

    EstimateReport rep;
    rep.delta = config.delta;

    const YieldSeries series = detail::run_stage("stage 1 (jump detection)", [&] {
        YieldSeries s = log_yields(prices, config.delta);
        rep.partition = detect_jumps(s, config.threshold);
        return s;
    });
    rep.observations = series.size();
    if (rep.partition.jump_frequency_warning())
        rep.warnings.push_back("more than one threshold exceedance per two intervals; "
                               "the one-jump-per-interval approximation is doubtful");

    rep.eta_hat = detail::run_stage("stage 2 (jump rate)", [&] { return estimate_eta(rep.partition); });

    rep.em = detail::run_stage("stage 3 (mixture EM)", [&] {
        const auto &w = rep.partition.diffusion_yields;
        MixtureState init = config.em_init ? *config.em_init : default_initial_state(w, config.states, config.delta);
        if (init.components() != config.states)
            throw ValidationError("initial mixture has " + std::to_string(init.components()) + " components, expected " +
                                  std::to_string(config.states));
        return run_em(w, init, config.delta, config.em);
    });
    if (!rep.em.converged)
        rep.warnings.push_back("mixture EM stopped at the iteration cap without meeting the tolerance");

    rep.sem = detail::run_stage("stage 4 (generator SEM)", [&] {
        const ObservationGrid grid{config.delta, static_cast<int>(series.size())};
        rep.clusters = split_clusters(rep.partition, grid);
        rep.labels = classify_clusters(rep.clusters, rep.em.final_state, config.delta);
        rep.partial = build_partial_path(rep.clusters, rep.labels);
        rep.q_init = config.q_init ? *config.q_init : default_generator(rep.partial, config.states);
        if (rep.q_init.states() != config.states)
            throw ValidationError("initial generator has the wrong number of states");
        Rng stream = split_stream(config.seed, {static_cast<std::uint64_t>(Stage::sem)});
        return run_sem(rep.partial, rep.q_init, stream(), config.sem);
    });
    for (int s : rep.sem.unvisited_states)
        rep.warnings.push_back("state " + std::to_string(s + 1) + " never visited; its generator row is zero");
    return rep;
}

namespace detail
{
inline json matrix_rows(const Eigen::MatrixXd &q)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < q.rows(); ++i)
    {
        json row = json::array();
        for (Eigen::Index j = 0; j < q.cols(); ++j)
            row.push_back(q(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}
} // namespace detail

/// Structured report; states are 1-based and in ascending-volatility order.
inline json report_to_json(const EstimateReport &rep)
{
    json states = json::array();
    for (std::size_t j = 0; j < rep.em.mu_hat.size(); ++j)
        states.push_back({{"state", j + 1},
                          {"pi", rep.em.final_state.pi[j]},
                          {"mu", rep.em.mu_hat[j]},
                          {"sigma", rep.em.sigma_hat[j]}});
    json jump_indices = json::array();
    for (auto i : rep.partition.jump_indices)
        jump_indices.push_back(i + 1);

    return json{
        {"observations", rep.observations},
        {"delta", rep.delta},
        {"threshold", rep.partition.threshold},
        {"jumps", rep.partition.jumps()},
        {"jump_yield_indices", jump_indices},
        {"eta_hat", rep.eta_hat},
        {"mixture",
         {{"states", states},
          {"iterations", rep.em.iterations},
          {"converged", rep.em.converged},
          {"final_loglik", rep.em.loglik_trace.back()}}},
        {"generator",
         {{"q_hat", detail::matrix_rows(rep.sem.q_hat.rates())},
          {"ci_level", rep.sem.ci_level},
          {"ci_lower", detail::matrix_rows(rep.sem.ci_lower)},
          {"ci_upper", detail::matrix_rows(rep.sem.ci_upper)},
          {"trace_sd", detail::matrix_rows(rep.sem.trace_sd)},
          {"q_init", detail::matrix_rows(rep.q_init.rates())},
          {"iterations", rep.sem.iterations_used},
          {"burn_in", rep.sem.burn_in}}},
        {"partial_path",
         {{"segments", rep.partial.segments.size()},
          {"gaps", rep.partial.gaps.size()},
          {"covered_start", rep.partial.covered_start()},
          {"covered_end", rep.partial.covered_end()}}},
        {"warnings", rep.warnings},
        {"notes", json::array({"consecutive price rows are treated as one sampling interval apart; "
                               "calendar gaps such as weekends and holidays are ignored"})},
    };
}

} // namespace mmjdm
