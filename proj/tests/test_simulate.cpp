#include "mmjdm/random.hpp"
#include "mmjdm/simulate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace mmjdm;

namespace
{

MmjdmParams single_state(double mu, double sigma)
{
    MmjdmParams p;
    p.q = IntensityMatrix(Eigen::MatrixXd::Zero(1, 1));
    p.mu = {mu};
    p.sigma = {sigma};
    p.eta = 10.0;
    p.s0 = 100.0;
    return p;
}

} // namespace

TEST(SimulateMjp, AbsorbingSingleState)
{
    Rng rng(1);
    const auto path = simulate_mjp(IntensityMatrix(Eigen::MatrixXd::Zero(1, 1)), 0, 1000.0, rng);
    EXPECT_EQ(path.jumps(), 0u);
    EXPECT_EQ(path.final_state(), 0);
}

TEST(SimulateMjp, MeanHoldingTimeInFirstState)
{
    const auto q = reference_parameters().q;
    Rng rng(2024);
    const int paths = 40000;
    double total = 0.0;
    for (int k = 0; k < paths; ++k)
    {
        const auto p = simulate_mjp(q, 0, 8820.0, rng);
        total += p.jumps() > 0 ? p.jump_times.front() : p.horizon;
    }
    const double expected = 1.0 / q.exit_rate(0); // ~378
    EXPECT_NEAR(total / paths, expected, 0.02 * expected);
}

TEST(SimulateMjp, SymmetricChainSpendsHalfTheTimeInEachState)
{
    Eigen::MatrixXd r(2, 2);
    r << 0, 1, 1, 0;
    const auto q = IntensityMatrix::from_off_diagonal(r);
    Rng rng(5);
    const double horizon = 1e4;
    const auto path = simulate_mjp(q, 0, horizon, rng);
    double in_first = 0.0, t = 0.0;
    int state = path.initial_state;
    for (std::size_t k = 0; k < path.jumps(); ++k)
    {
        if (state == 0)
            in_first += path.jump_times[k] - t;
        t = path.jump_times[k];
        state = path.post_jump_states[k];
    }
    if (state == 0)
        in_first += horizon - t;
    EXPECT_NEAR(in_first / horizon, 0.5, 0.01);
}

TEST(SimulateMjp, JumpsAlwaysChangeStateAndStayInside)
{
    const auto q = reference_parameters().q;
    Rng rng(9);
    const auto path = simulate_mjp(q, 0, 1e5, rng);
    int prev = path.initial_state;
    double t = 0.0;
    for (std::size_t k = 0; k < path.jumps(); ++k)
    {
        EXPECT_NE(path.post_jump_states[k], prev);
        EXPECT_GT(path.jump_times[k], t);
        EXPECT_LT(path.jump_times[k], path.horizon);
        prev = path.post_jump_states[k];
        t = path.jump_times[k];
    }
}

TEST(Laplace, Moments)
{
    const double eta = 250.0 / 33.0;
    Rng rng(77);
    const int n = 100000;
    double abs_sum = 0.0, sum = 0.0, sq = 0.0;
    for (int k = 0; k < n; ++k)
    {
        const double j = sample_laplace_jump(eta, rng);
        abs_sum += std::abs(j);
        sum += j;
        sq += j * j;
    }
    EXPECT_NEAR(abs_sum / n, 0.132, 0.01 * 0.132);
    const double var_true = 2.0 / (eta * eta);
    EXPECT_NEAR(sum / n, 0.0, 3.0 * std::sqrt(var_true / n));
    const double mean = sum / n;
    EXPECT_NEAR(sq / n - mean * mean, var_true, 0.02 * var_true);
}

TEST(SimulateMmjdm, ConstantPriceWithoutDiffusionOrJumps)
{
    const auto p = single_state(0.0, 0.0);
    Rng rng(1);
    SimulationOptions opt;
    opt.suppress_price_jumps = true;
    const auto path = simulate_mmjdm(p, ObservationGrid{1.0, 50}, rng, opt);
    for (double s : path.prices)
        EXPECT_EQ(s, 100.0);
}

TEST(SimulateMmjdm, DeterministicGrowth)
{
    const double mu = 0.01;
    const auto p = single_state(mu, 0.0);
    Rng rng(1);
    const ObservationGrid grid{0.5, 200};
    const auto path = simulate_mmjdm(p, grid, rng);
    ASSERT_EQ(path.prices.size(), 201u);
    for (int i = 0; i <= grid.intervals; ++i)
        EXPECT_NEAR(path.prices[static_cast<std::size_t>(i)], 100.0 * std::exp(mu * i * grid.delta),
                    1e-13 * 100.0 * std::exp(mu * i * grid.delta));
}

TEST(SimulateMmjdm, JumpsMultiplyThePriceExactly)
{
    // Without diffusion the log-price is the running sum of the log-jumps.
    MmjdmParams p = reference_parameters();
    p.mu = {0.0, 0.0, 0.0};
    p.sigma = {0.0, 0.0, 0.0};
    Rng rng(31);
    const ObservationGrid grid{1.0, 20000};
    const auto path = simulate_mmjdm(p, grid, rng);
    ASSERT_GT(path.latent.jumps(), 10u);
    ASSERT_EQ(path.jump_log_sizes.size(), path.latent.jumps());
    std::size_t k = 0;
    double log_sum = 0.0;
    for (int i = 1; i <= grid.intervals; ++i)
    {
        while (k < path.latent.jumps() && path.latent.jump_times[k] < grid.time(i))
            log_sum += path.jump_log_sizes[k++];
        EXPECT_NEAR(std::log(path.prices[static_cast<std::size_t>(i)] / p.s0), log_sum, 1e-12);
    }
}

TEST(SimulateMmjdm, PositiveAndDeterministic)
{
    const auto p = reference_parameters();
    const ObservationGrid grid{1.0, 1260};
    Rng a(42), b(42);
    const auto pa = simulate_mmjdm(p, grid, a);
    const auto pb = simulate_mmjdm(p, grid, b);
    EXPECT_EQ(pa.prices[0], p.s0);
    for (double s : pa.prices)
        EXPECT_GT(s, 0.0);
    EXPECT_EQ(pa.prices, pb.prices);
    EXPECT_EQ(pa.latent.jump_times, pb.latent.jump_times);
    EXPECT_EQ(pa.jump_log_sizes, pb.jump_log_sizes);
}

TEST(SimulateMmjdm, JumpFreeYieldsFollowTheRegimeLaw)
{
    // Intervals with no latent switch: y ~ N(delta_j * dt, sigma_j^2 * dt).
    const auto p = reference_parameters();
    const ObservationGrid grid{1.0, 8820};
    std::vector<std::vector<double>> by_state(3);
    for (std::uint64_t seed = 0; seed < 4; ++seed)
    {
        Rng rng(100 + seed);
        const auto path = simulate_mmjdm(p, grid, rng);
        std::size_t k = 0;
        for (int i = 1; i <= grid.intervals; ++i)
        {
            const int state = path.latent.state_at(grid.time(i - 1));
            bool switched = false;
            while (k < path.latent.jumps() && path.latent.jump_times[k] < grid.time(i))
            {
                switched = true;
                ++k;
            }
            if (!switched)
                by_state[static_cast<std::size_t>(state)].push_back(
                    std::log(path.prices[static_cast<std::size_t>(i)] / path.prices[static_cast<std::size_t>(i - 1)]));
        }
    }
    for (std::size_t j = 0; j < 3; ++j)
    {
        const auto &y = by_state[j];
        ASSERT_GT(y.size(), 500u) << "state " << j;
        const double n = static_cast<double>(y.size());
        const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
        double var = 0.0;
        for (double v : y)
            var += (v - mean) * (v - mean);
        var /= n;
        const double s2 = p.sigma[j] * p.sigma[j];
        EXPECT_NEAR(mean, delta_drift(p.mu[j], p.sigma[j]), 3.0 * std::sqrt(s2 / n)) << "state " << j;
        EXPECT_NEAR(var, s2, 3.0 * s2 * std::sqrt(2.0 / n)) << "state " << j;
    }
}

TEST(SimulateMmjdm, RejectsInvalidParameters)
{
    MmjdmParams p = reference_parameters();
    p.eta = -1.0;
    Rng rng(1);
    EXPECT_THROW(simulate_mmjdm(p, ObservationGrid{1.0, 10}, rng), ValidationError);
    EXPECT_THROW(simulate_mmjdm(reference_parameters(), ObservationGrid{1.0, 0}, rng), ValidationError);
}

TEST(Random, SplitStreamsAreReproducibleAndDistinct)
{
    Rng a = split_stream(7, {1, 2});
    Rng b = split_stream(7, {1, 2});
    Rng c = split_stream(7, {1, 3});
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
}
