#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "heatmorse/manifold.hpp"

namespace heatmorse {

/// Counter-based generator: every draw is a pure function of
/// (key, stream, counter), so results do not depend on call order or threads.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t stream = 0) : key_(key), stream_(stream) {}

  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits(std::uint64_t counter) const {
    return mix(mix(mix(key_) ^ stream_) ^ counter);
  }

  /// Uniform in (0, 1].
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on counters 2i, 2i+1.
  double normal(std::uint64_t i) const {
    const double u1 = uniform(2 * i), u2 = uniform(2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_, stream_;
};

/// Points i * 2 pi / per_axis along every axis of T^n, row-major, flattened.
inline std::vector<double> torus_grid(int n, int per_axis) {
  std::size_t total = 1;
  for (int a = 0; a < n; ++a) total *= static_cast<std::size_t>(per_axis);
  std::vector<double> pts(total * static_cast<std::size_t>(n));
  const double h = 2.0 * std::numbers::pi / per_axis;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (int a = n - 1; a >= 0; --a) {
      pts[idx * n + a] = static_cast<double>(rem % per_axis) * h;
      rem /= per_axis;
    }
  }
  return pts;
}

/// Quasi-uniform points on S^n, flattened (n+1 coordinates each). The set is
/// nested: the first m points of sphere_samples(n, M) equal sphere_samples(n, m).
/// It starts with the 2(n+1) points +-e_i, then continues with a golden-ratio
/// Kronecker sequence (n = 1), its equal-area image under the plastic-number
/// R2 sequence (n = 2, a nested counterpart of the Fibonacci lattice), or
/// rejection-sampled uniform points (n >= 3).
inline std::vector<double> sphere_samples(int n, std::size_t count, std::uint64_t key = 0x5eed) {
  const int d = n + 1;
  std::vector<double> pts;
  pts.reserve(count * d);
  for (int a = 0; a < d && pts.size() < count * d; ++a)
    for (int s : {1, -1}) {
      if (pts.size() >= count * d) break;
      for (int b = 0; b < d; ++b) pts.push_back(b == a ? s : 0.0);
    }
  const double two_pi = 2.0 * std::numbers::pi;
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  constexpr double plastic = 1.32471795724474602596;
  const CounterRng rng(key, 0x53504845);
  std::uint64_t i = 0, draw = 0;
  while (pts.size() < count * d) {
    ++i;
    if (n == 1) {
      const double th = two_pi * std::fmod(0.5 + i * golden, 1.0);
      pts.push_back(std::cos(th));
      pts.push_back(std::sin(th));
    } else if (n == 2) {
      const double u = std::fmod(0.5 + i / plastic, 1.0);
      const double v = std::fmod(0.5 + i / (plastic * plastic), 1.0);
      const double z = 1.0 - 2.0 * u;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      pts.push_back(r * std::cos(two_pi * v));
      pts.push_back(r * std::sin(two_pi * v));
      pts.push_back(z);
    } else {
      std::vector<double> x(d);
      double norm2;
      do {
        norm2 = 0.0;
        for (int a = 0; a < d; ++a) {
          x[a] = 2.0 * rng.uniform(draw++) - 1.0;
          norm2 += x[a] * x[a];
        }
      } while (norm2 > 1.0 || norm2 < 1e-12);
      const double inv = 1.0 / std::sqrt(norm2);
      for (double v : x) pts.push_back(v * inv);
    }
  }
  return pts;
}

}  // namespace heatmorse
