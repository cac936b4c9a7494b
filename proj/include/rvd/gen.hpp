#pragma once

#include <cstdint>
#include <string>

#include "rvd/ensemble.hpp"

namespace rvd {

// Initial-data families. All are rejection-sampled so that |x| <= R and
// |p| <= R hold exactly; total weight is 1 (w = 1/N per particle).
Ensemble make_gaussian_ball(std::size_t n, double radius, double momentum_scale, std::uint64_t seed);
Ensemble make_uniform_ball(std::size_t n, double radius, double momentum_scale, std::uint64_t seed);
// counter-streaming beams along z with a thermal spread
Ensemble make_two_stream(std::size_t n, double radius, double momentum_scale, std::uint64_t seed);

Ensemble make_family(const std::string& family, std::size_t n, double radius, double momentum_scale,
                     std::uint64_t seed);

// independent per-particle displacement of x and p, each uniform in the
// ball of radius delta; the support radius grows by delta
Ensemble jitter_ensemble(const Ensemble& ens, double delta, std::uint64_t seed);

}  // namespace rvd
