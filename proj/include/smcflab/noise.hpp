#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "smcflab/rng.hpp"

namespace smcflab {

// Scalar Brownian increments shared by an entire field update (the noise is
// spatially uniform). Increments are a pure function of (baseSeed, pathId,
// finest subdivision, counter), so a path can be regenerated anywhere.
//
// Refinement works without bridge sampling: draws happen on a finest lattice
// of finest_subdivision sub-steps per base step, and every coarser level
// is defined as left-to-right block sums of that lattice. Any refinement
// chain reaching the same subdivision therefore yields bit-identical
// increments.
struct NoisePath {
  std::uint64_t base_seed = 0;
  std::uint64_t path_id = 0;
  double base_dt = 0.0;          // dt of the originally sampled level
  std::uint32_t finest = 1;      // S: finest sub-steps per base step
  std::uint32_t subdivision = 1; // R: this level has dt = base_dt / R
  std::vector<double> increments;

  double dt() const { return base_dt / subdivision; }
  std::size_t steps() const { return increments.size(); }

  double total() const {
    double s = 0.0;
    for (double x : increments) s += x;
    return s;
  }
};

namespace detail {

// Increment k at subdivision R: sum of the finest draws it covers.
inline std::vector<double> level_increments(std::uint64_t seed,
                                            std::uint64_t path,
                                            std::size_t base_steps, double base_dt,
                                            std::uint32_t finest,
                                            std::uint32_t subdivision) {
  const std::uint64_t k = rng::key(seed, path, 0, finest);
  const double fine_dt = base_dt / finest;
  const double scale = std::sqrt(fine_dt);
  const std::size_t block = finest / subdivision;
  const std::size_t n = base_steps * subdivision;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const std::uint64_t first = static_cast<std::uint64_t>(i) * block;
    for (std::size_t j = 0; j < block; ++j)
      s += rng::normal(k, first + j) * scale;
    out[i] = s;
  }
  return out;
}

}  // namespace detail

inline NoisePath sample_increments(std::uint64_t base_seed, std::uint64_t path_id,
                                   std::size_t steps, double dt,
                                   std::uint32_t finest_subdivision = 1) {
  if (steps == 0) throw std::invalid_argument("noise: steps must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("noise: dt must be positive");
  if (finest_subdivision == 0)
    throw std::invalid_argument("noise: finest subdivision must be positive");
  NoisePath p;
  p.base_seed = base_seed;
  p.path_id = path_id;
  p.base_dt = dt;
  p.finest = finest_subdivision;
  p.subdivision = 1;
  p.increments = detail::level_increments(base_seed, path_id, steps, dt,
                                          finest_subdivision, 1);
  return p;
}

inline NoisePath refine(const NoisePath& path, std::uint32_t factor) {
  if (factor < 2) throw std::invalid_argument("noise: refine factor must be >= 2");
  const std::uint64_t target = static_cast<std::uint64_t>(path.subdivision) * factor;
  if (target > path.finest || path.finest % target != 0)
    throw std::invalid_argument(
        "noise: refine factor exceeds the configured finest level");
  NoisePath p;
  p.base_seed = path.base_seed;
  p.path_id = path.path_id;
  p.base_dt = path.base_dt;
  p.finest = path.finest;
  p.subdivision = static_cast<std::uint32_t>(target);
  const std::size_t base_steps = path.steps() / path.subdivision;
  p.increments = detail::level_increments(path.base_seed, path.path_id, base_steps,
                                          path.base_dt, path.finest, p.subdivision);
  return p;
}

}  // namespace smcflab
