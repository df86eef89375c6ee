#include "crtnd/rng.hpp"

namespace crtnd {

Rng make_stream(std::uint64_t seed, StreamDomain domain, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(domain), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

double draw_beta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  for (;;) {
    const double x = ga(rng);
    const double y = gb(rng);
    // Beta(0.5, 0.5) puts mass near both ends; keep draws strictly inside
    // (0, 1) so every relative ascertainment is positive.
    if (x > 0.0 && y > 0.0) return x / (x + y);
  }
}

}  // namespace crtnd
