#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <numbers>
#include <string>
#include <vector>

#include "heatmorse/error.hpp"

namespace heatmorse {

enum class Phase { Cos, Sin };

inline std::string to_string(Phase p) { return p == Phase::Cos ? "cos" : "sin"; }

/// cos(k.x) or sin(k.x) on T^n. Stored unnormalized; see torus_mode_norm.
struct TorusMode {
  std::vector<int> k;
  Phase phase = Phase::Cos;

  long eigenvalue() const {
    long s = 0;
    for (int ki : k) s += static_cast<long>(ki) * ki;
    return s;
  }

  bool is_constant() const {
    return std::all_of(k.begin(), k.end(), [](int v) { return v == 0; });
  }

  friend auto operator<=>(const TorusMode&, const TorusMode&) = default;
};

/// Representative of {k, -k}: first nonzero entry positive. Idempotent.
inline std::vector<int> canonical_wavevector(std::vector<int> k) {
  for (int v : k) {
    if (v == 0) continue;
    if (v < 0)
      for (int& w : k) w = -w;
    break;
  }
  return k;
}

inline bool is_canonical_wavevector(const std::vector<int>& k) { return canonical_wavevector(k) == k; }

/// Rewrites a mode with k in canonical form. sin(-k.x) = -sin(k.x), so the
/// returned sign multiplies the coefficient.
inline std::pair<TorusMode, int> canonicalize(TorusMode m) {
  auto c = canonical_wavevector(m.k);
  int sign = 1;
  if (c != m.k && m.phase == Phase::Sin) sign = -1;
  m.k = std::move(c);
  return {std::move(m), sign};
}

/// L^2(T^n) norm of an unnormalized mode: (2 pi)^{n/2}, or (2 pi)^{n/2}/sqrt 2
/// for nonconstant modes.
inline double torus_mode_norm(const TorusMode& m) {
  const double full = std::pow(2.0 * std::numbers::pi, 0.5 * static_cast<double>(m.k.size()));
  return m.is_constant() ? full : full / std::sqrt(2.0);
}

namespace detail {

// representable[s] is true iff s is a sum of n squares, for s <= limit.
inline std::vector<char> sums_of_squares_table(int n, long limit) {
  std::vector<char> reach(static_cast<std::size_t>(limit) + 1, 0);
  reach[0] = 1;
  for (int d = 0; d < n; ++d) {
    std::vector<char> next(reach.size(), 0);
    for (long s = 0; s <= limit; ++s) {
      if (!reach[s]) continue;
      for (long q = 0; s + q * q <= limit; ++q) next[s + q * q] = 1;
    }
    reach.swap(next);
  }
  return reach;
}

}  // namespace detail

/// The first `count` distinct eigenvalues of the flat-torus Laplacian: the
/// integers expressible as k_1^2 + ... + k_n^2, ascending.
inline std::vector<long> torus_spectrum(int n, int count) {
  if (n < 1) throw DomainError("torus dimension must be >= 1");
  if (count < 1) throw DomainError("eigenvalue count must be >= 1");
  long limit = 16;
  for (;;) {
    auto table = detail::sums_of_squares_table(n, limit);
    std::vector<long> out;
    for (long s = 0; s <= limit && static_cast<int>(out.size()) < count; ++s)
      if (table[s]) out.push_back(s);
    if (static_cast<int>(out.size()) == count) return out;
    limit *= 2;
  }
}

inline bool is_torus_eigenvalue(int n, long lambda) {
  if (lambda < 0) return false;
  return detail::sums_of_squares_table(n, lambda)[lambda] != 0;
}

/// Index j with lambda_j = lambda, or -1 when lambda is not an eigenvalue.
inline int torus_level_of(int n, long lambda) {
  if (lambda < 0) return -1;
  auto table = detail::sums_of_squares_table(n, lambda);
  if (!table[lambda]) return -1;
  int level = 0;
  for (long s = 0; s < lambda; ++s) level += table[s] ? 1 : 0;
  return level;
}

/// Basis of the eigenspace for lambda: one canonical k per +-pair, cos then sin
/// (a single constant mode for lambda = 0). Sorted lexicographically in k.
inline std::vector<TorusMode> torus_modes(int n, long lambda) {
  if (n < 1) throw DomainError("torus dimension must be >= 1");
  if (!is_torus_eigenvalue(n, lambda))
    throw DomainError("not an eigenvalue: " + std::to_string(lambda) + " is not a sum of " + std::to_string(n) +
                      " squares");
  if (lambda == 0) return {TorusMode{std::vector<int>(n, 0), Phase::Cos}};

  const int bound = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(lambda))));
  std::vector<std::vector<int>> ks;
  std::vector<int> k(n, -bound);
  // odometer over the box [-bound, bound]^n
  for (;;) {
    long s = 0;
    for (int v : k) s += static_cast<long>(v) * v;
    if (s == lambda && is_canonical_wavevector(k)) ks.push_back(k);
    int d = n - 1;
    while (d >= 0 && k[d] == bound) k[d--] = -bound;
    if (d < 0) break;
    ++k[d];
  }
  std::sort(ks.begin(), ks.end());
  std::vector<TorusMode> modes;
  modes.reserve(2 * ks.size());
  for (auto& kk : ks) {
    modes.push_back({kk, Phase::Cos});
    modes.push_back({kk, Phase::Sin});
  }
  return modes;
}

}  // namespace heatmorse
