#pragma once

#include <cstdint>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmxa {

/// Thrown on dimension mismatches and invalid arguments across all modules.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DomainError(msg);
}

// --- deterministic RNG -------------------------------------------------
//
// splitmix64 core. Distributions are implemented by hand so results are
// bit-stable across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::int64_t uniform_int(std::int64_t n) {
    return static_cast<std::int64_t>(next_u64() % static_cast<std::uint64_t>(n));
  }

  /// Standard normal via Box-Muller (no cached spare; deterministic).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Independent child stream; safe for per-block parallel sampling.
  Rng derive(std::uint64_t stream) const {
    Rng child(state_ ^ (0x5851f42d4c957f2dull * (stream + 1)));
    child.next_u64();
    return child;
  }

 private:
  std::uint64_t state_;
};

// --- thread pool free functions ----------------------------------------

int max_threads();
void set_max_threads(int n);

/// Runs fn(begin, end) over a deterministic partition of [0, n).
/// Blocks do not overlap, so writes to disjoint output slots are safe and
/// results are independent of the worker count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

/// Parallel sum of per-index values with block-ordered (deterministic) reduction.
double parallel_sum(std::int64_t n, const std::function<double(std::int64_t)>& term);

inline double sqr(double x) { return x * x; }

/// Volume of the unit ball in R^k: pi^(k/2) / Gamma(k/2 + 1).
inline double unit_ball_volume(int k) {
  if (k == 0) return 1.0;
  return std::pow(3.14159265358979323846, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace gmxa
