#pragma once

// Reproducible random streams.
//
// A run is identified by (seed, partitions). Replications are split into
// `partitions` contiguous chunks; chunk c draws from std::mt19937_64 seeded
// with the c-th output of SplitMix64 started at `seed`. Normal variates come
// from boost::random::normal_distribution (ziggurat), whose algorithm is
// fixed in the header, unlike std::normal_distribution. The merged result
// therefore depends on (seed, partitions) only, not on the worker count or
// the platform's standard library.

#include <boost/random/normal_distribution.hpp>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace tubeband {

std::uint64_t splitmix64(std::uint64_t& state);

/// Engine for chunk `stream` of a run seeded with `seed`.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream);

using NormalDistribution = boost::random::normal_distribution<double>;

/// Number of worker threads: TUBEBAND_THREADS when set and positive,
/// otherwise the hardware concurrency (at least 1).
int worker_count();

/// Runs fn(chunk) for chunk = 0..chunks-1 on up to worker_count() threads.
/// fn must only write to per-chunk state.
void parallel_chunks(std::size_t chunks,
                     const std::function<void(std::size_t)>& fn);

/// Size of chunk c when `total` items are split into `chunks` parts.
std::size_t chunk_size(std::size_t total, std::size_t chunks, std::size_t c);

}  // namespace tubeband
