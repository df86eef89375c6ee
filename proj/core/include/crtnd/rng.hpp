#pragma once

#include <cstdint>
#include <random>

namespace crtnd {

using Rng = std::mt19937_64;

// Independent purposes draw from disjoint substream families.
enum class StreamDomain : std::uint32_t {
  study = 1,        // study-level constants (relative ascertainment)
  replicate = 2,    // per-replicate potential outcomes and assignment
  permutation = 3,  // Monte Carlo permutation draws
  analysis = 4,     // CLI-level draws not tied to a replicate
};

// Counter-based derivation: (seed, domain, index) -> engine. The engine state
// depends only on these three values, so replicate i sees the same stream no
// matter which thread runs it or in which order replicates are processed.
Rng make_stream(std::uint64_t seed, StreamDomain domain, std::uint64_t index);

double draw_beta(Rng& rng, double a, double b);

}  // namespace crtnd
