#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mmjdm
{

using Rng = std::mt19937_64;

/// Independent generator for a named sub-stream of a master seed.
inline Rng split_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path)
{
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(master),
                                     static_cast<std::uint32_t>(master >> 32)};
    for (auto p : path)
    {
        words.push_back(static_cast<std::uint32_t>(p));
        words.push_back(static_cast<std::uint32_t>(p >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

/// Stream ids for the stochastic pipeline stages.
enum class Stage : std::uint64_t
{
    simulate = 1,
    sem = 4,
};

} // namespace mmjdm
