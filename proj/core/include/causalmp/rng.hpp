#pragma once

#include <cstdint>
#include <random>

namespace causalmp {

using Rng = std::mt19937_64;

// Independent, reproducible stream for (seed, stream). Every consumer of
// randomness derives its generator from here so that reordering work never
// changes results.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

// Stream tags used by the pipeline.
namespace stream {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kEmbedding = 2;
inline constexpr std::uint64_t kLinkPred = 3;
inline constexpr std::uint64_t kCenters = 4;
inline constexpr std::uint64_t kNoise = 5;
inline constexpr std::uint64_t kNodeClass = 6;
inline constexpr std::uint64_t kCaseStudy = 7;
}  // namespace stream

}  // namespace causalmp
