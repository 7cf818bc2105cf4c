#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace hsmrf {

using Engine = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

} // namespace detail

/// Derives an independent 64-bit seed from a master seed and a path of
/// stream indices (e.g. {replicate, model, chain}).
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = detail::splitmix64(master);
  for (auto p : path)
    h = detail::splitmix64(h ^ detail::splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Engine for stream `path` under `master`. Streams with different paths are
/// seeded through a full seed_seq so that their states do not overlap in any
/// practical sense.
inline Engine make_engine(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path = {}) {
  const std::uint64_t s = derive_seed(master, path);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(master),
                    static_cast<std::uint32_t>(master >> 32)};
  return Engine(seq);
}

inline double std_normal(Engine &rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

/// Uniform on the open interval (0, 1).
inline double uniform_open(Engine &rng) {
  double u;
  do {
    u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  } while (u <= 0.0);
  return u;
}

/// Inverse-gamma draw with density proportional to x^{-shape-1} exp(-rate/x).
inline double inv_gamma(Engine &rng, double shape, double rate) {
  const double g = std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
  return 1.0 / g;
}

} // namespace hsmrf
