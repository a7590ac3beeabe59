#pragma once

#include "mmjdm/mixture_em.hpp"
#include "mmjdm/model.hpp"
#include "mmjdm/yields.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace mmjdm
{

/*
 * Diffusion yields between two consecutive detected jumps. A yield with
 * index i covers [i*dt, (i+1)*dt], so a cluster of indices a..b spans
 * [a*dt, (b+1)*dt]. An empty cluster (jump at the first or last interval)
 * has start_time == end_time at the boundary it would have occupied.
 */
struct Cluster
{
    double start_time = 0.0;
    double end_time = 0.0;
    std::vector<std::size_t> indices;
    std::vector<double> yields;

    bool empty() const { return yields.empty(); }
};

struct Segment
{
    double start = 0.0;
    double end = 0.0;
    int state = 0;

    double length() const { return end - start; }
};

struct Gap
{
    double start = 0.0;
    double end = 0.0;
    int left_state = 0;
    int right_state = 0;

    double length() const { return end - start; }
};

/// Environment path known on the segments; the gaps between them are unobserved.
struct PartialMjpPath
{
    std::vector<Segment> segments;
    std::vector<Gap> gaps; ///< gaps[k] lies between segments[k] and segments[k+1]

    double covered_start() const { return segments.empty() ? 0.0 : segments.front().start; }
    double covered_end() const { return segments.empty() ? 0.0 : segments.back().end; }
    double covered_length() const { return covered_end() - covered_start(); }
};

/// The K+1 blocks of diffusion yields delimited by the K detected jumps.
inline std::vector<Cluster> split_clusters(const JumpPartition &partition, const ObservationGrid &grid)
{
    std::vector<Cluster> out(partition.jumps() + 1);
    std::size_t k = 0;
    for (std::size_t n = 0; n < partition.diffusion_indices.size(); ++n)
    {
        const std::size_t idx = partition.diffusion_indices[n];
        while (k < partition.jumps() && partition.jump_indices[k] < idx)
            ++k;
        out[k].indices.push_back(idx);
        out[k].yields.push_back(partition.diffusion_yields[n]);
    }
    for (std::size_t c = 0; c < out.size(); ++c)
    {
        auto &cl = out[c];
        if (!cl.empty())
        {
            cl.start_time = grid.time(static_cast<int>(cl.indices.front()));
            cl.end_time = grid.time(static_cast<int>(cl.indices.back()) + 1);
        }
        else
        {
            // Anchor on the right edge of the previous jump, or time 0 before the first.
            const double t = c == 0 ? 0.0 : grid.time(static_cast<int>(partition.jump_indices[c - 1]) + 1);
            cl.start_time = cl.end_time = t;
        }
    }
    return out;
}

struct ClusterLabel
{
    int label = 0; ///< 0-based component index
    std::vector<double> log_scores;
};

/*
 * Scores each component by the log of the product of per-yield
 * responsibilities and picks the largest; ties go to the smallest index.
 */
inline ClusterLabel classify_cluster(const Cluster &cluster, const MixtureState &state, double dt)
{
    ClusterLabel out;
    const auto m = static_cast<std::size_t>(state.components());
    out.log_scores.assign(m, 0.0);
    std::vector<double> lj(m);
    for (double w : cluster.yields)
    {
        detail::log_joint(w, state, dt, lj);
        const double norm = detail::log_sum_exp(lj);
        for (std::size_t j = 0; j < m; ++j)
            out.log_scores[j] += lj[j] - norm;
    }
    for (std::size_t j = 1; j < m; ++j)
        if (out.log_scores[j] > out.log_scores[static_cast<std::size_t>(out.label)])
            out.label = static_cast<int>(j);
    return out;
}

/*
 * Turns labelled clusters into alternating segments and gaps. Empty
 * clusters carry no label: the gaps on either side of one fuse into a
 * single gap between the nearest nonempty neighbours. Anything before the
 * first or after the last nonempty cluster is outside the covered horizon.
 */
inline PartialMjpPath build_partial_path(const std::vector<Cluster> &clusters, const std::vector<int> &labels)
{
    if (labels.size() != clusters.size())
        throw ValidationError("build_partial_path: need one label per cluster");
    PartialMjpPath out;
    for (std::size_t c = 0; c < clusters.size(); ++c)
    {
        if (clusters[c].empty())
            continue;
        Segment seg{clusters[c].start_time, clusters[c].end_time, labels[c]};
        if (!out.segments.empty())
        {
            const Segment &prev = out.segments.back();
            out.gaps.push_back(Gap{prev.end, seg.start, prev.state, seg.state});
        }
        out.segments.push_back(seg);
    }
    return out;
}

/// Labels every cluster (empty ones get 0, which build_partial_path ignores).
inline std::vector<int> classify_clusters(const std::vector<Cluster> &clusters, const MixtureState &state,
                                          double dt)
{
    std::vector<int> labels;
    labels.reserve(clusters.size());
    for (const auto &c : clusters)
        labels.push_back(c.empty() ? 0 : classify_cluster(c, state, dt).label);
    return labels;
}

} // namespace mmjdm
