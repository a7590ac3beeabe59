#pragma once

#include "mmjdm/error.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace mmjdm
{

/// Log-yields y_i = log(S_i / S_{i-1}); yield i (0-based) covers [i*delta, (i+1)*delta].
struct YieldSeries
{
    std::vector<double> values;
    double delta = 1.0;

    std::size_t size() const { return values.size(); }
};

/*
 * Split of a yield series into jump-flagged intervals and diffusion-only
 * yields. Indices are 0-based positions in the yield series.
 *
 * Within a run of consecutive exceedances only the largest |y| stays flagged;
 * the other run members are treated as diffusion yields and also listed in
 * `merged_indices`.
 */
struct JumpPartition
{
    std::vector<std::size_t> jump_indices;
    std::vector<double> jump_yields;
    std::vector<std::size_t> diffusion_indices;
    std::vector<double> diffusion_yields;
    std::vector<std::size_t> merged_indices;
    std::size_t exceedances = 0; ///< count of |y| > U before merging
    std::size_t series_length = 0;
    double threshold = 0.0;

    std::size_t jumps() const { return jump_indices.size(); }

    /// More than one detected exceedance per two intervals breaks the
    /// one-jump-per-interval approximation.
    bool jump_frequency_warning() const { return 2 * exceedances > series_length; }
};

inline YieldSeries log_yields(std::span<const double> prices, double delta)
{
    if (prices.size() < 2)
        throw ValidationError("log_yields: need at least two prices");
    if (!(delta > 0.0))
        throw ValidationError("log_yields: nonpositive sampling interval");
    for (std::size_t i = 0; i < prices.size(); ++i)
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i]))
            throw ValidationError("log_yields: nonpositive price at index " + std::to_string(i));

    YieldSeries out;
    out.delta = delta;
    out.values.reserve(prices.size() - 1);
    for (std::size_t i = 1; i < prices.size(); ++i)
        out.values.push_back(std::log(prices[i] / prices[i - 1]));
    return out;
}

inline JumpPartition detect_jumps(const YieldSeries &series, double threshold)
{
    if (!(threshold > 0.0))
        throw ValidationError("detect_jumps: threshold must be positive");

    const auto &y = series.values;
    JumpPartition out;
    out.threshold = threshold;
    out.series_length = y.size();

    std::vector<bool> kept(y.size(), false);
    for (std::size_t i = 0; i < y.size();)
    {
        if (std::abs(y[i]) <= threshold)
        {
            ++i;
            continue;
        }
        std::size_t best = i;
        std::size_t end = i;
        for (; end < y.size() && std::abs(y[end]) > threshold; ++end)
        {
            ++out.exceedances;
            if (std::abs(y[end]) > std::abs(y[best]))
                best = end;
        }
        for (std::size_t k = i; k < end; ++k)
            if (k != best)
                out.merged_indices.push_back(k);
        kept[best] = true;
        i = end;
    }

    for (std::size_t i = 0; i < y.size(); ++i)
    {
        if (kept[i])
        {
            out.jump_indices.push_back(i);
            out.jump_yields.push_back(y[i]);
        }
        else
        {
            out.diffusion_indices.push_back(i);
            out.diffusion_yields.push_back(y[i]);
        }
    }
    return out;
}

/// Maximum-likelihood jump rate: K / sum |y_J|.
inline double estimate_eta(const JumpPartition &partition)
{
    if (partition.jump_yields.empty())
        throw NumericalError("no jumps detected; eta not identifiable");
    double total = 0.0;
    for (double y : partition.jump_yields)
        total += std::abs(y);
    if (!(total > 0.0))
        throw NumericalError("jump yields sum to zero; eta not identifiable");
    return static_cast<double>(partition.jump_yields.size()) / total;
}

struct ThresholdSuggestion
{
    double threshold = 0.0;
    double robust_scale = 0.0; ///< 1.4826 * MAD
    bool degenerate = false;   ///< zero scale, threshold unusable
};

namespace detail
{
inline double median(std::vector<double> v)
{
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1)
        return hi;
    double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}
} // namespace detail

/// Advisory threshold: multiplier times the normal-consistent MAD of the yields.
inline ThresholdSuggestion suggest_threshold(const YieldSeries &series, double multiplier = 5.0)
{
    if (!(multiplier > 0.0))
        throw ValidationError("suggest_threshold: multiplier must be positive");
    if (series.size() < 10)
        throw ValidationError("suggest_threshold: need at least 10 yields");

    const double center = detail::median(series.values);
    std::vector<double> dev;
    dev.reserve(series.size());
    for (double y : series.values)
        dev.push_back(std::abs(y - center));
    ThresholdSuggestion out;
    out.robust_scale = 1.4826 * detail::median(std::move(dev));
    out.threshold = multiplier * out.robust_scale;
    out.degenerate = !(out.robust_scale > 0.0);
    return out;
}

} // namespace mmjdm
