#pragma once

// Reference values computed without the library: closed forms, brute-force
// quadrature in long double, and exact integer arithmetic.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace oracle {

/// P[trailing expert] for two experts whose penalized states differ by gap:
/// P[q2 - q1 >= eps * gap] = exp(-eps * gap) / 2 for i.i.d. Exp(1).
inline double two_expert_trailing(double epsilon, double gap) { return 0.5 * std::exp(-epsilon * gap); }

/// Selection probabilities by composite Simpson on a fixed fine grid,
///   P[i] = int_0^Y exp(-(a_i + y)) prod_{j != i} (1 - exp(-(a_j + y))) dy,
/// a_j = eps (s_j - min s), in long double.
inline std::vector<double> selection_by_simpson(std::span<const double> state, double epsilon,
                                                std::size_t intervals = 200000, long double upper = 60.0L) {
  const std::size_t n = state.size();
  long double lo = state[0];
  for (double s : state) lo = std::min<long double>(lo, s);
  std::vector<long double> a(n);
  for (std::size_t j = 0; j < n; ++j) a[j] = static_cast<long double>(epsilon) * (state[j] - lo);
  const long double h = upper / static_cast<long double>(intervals);
  std::vector<long double> acc(n, 0.0L);
  for (std::size_t m = 0; m <= intervals; ++m) {
    const long double y = h * static_cast<long double>(m);
    const long double w = (m == 0 || m == intervals) ? 1.0L : (m % 2 == 1 ? 4.0L : 2.0L);
    for (std::size_t i = 0; i < n; ++i) {
      long double f = std::exp(-(a[i] + y));
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) f *= 1.0L - std::exp(-(a[j] + y));
      }
      acc[i] += w * f;
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(acc[i] * h / 3.0L);
  return out;
}

/// E[max of n i.i.d. Exp(1)] = H_n.
inline double harmonic(std::size_t n) {
  double h = 0.0;
  for (std::size_t i = n; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

/// Random123 known-answer vectors for Philox4x32-10: {counter, key, output}.
struct PhiloxVector {
  std::array<std::uint32_t, 4> counter;
  std::array<std::uint32_t, 2> key;
  std::array<std::uint32_t, 4> output;
};

inline constexpr std::array<PhiloxVector, 3> kPhiloxVectors{{
    {{0, 0, 0, 0}, {0, 0}, {0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}},
    {{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
     {0xffffffff, 0xffffffff},
     {0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}},
    {{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
     {0xa4093822, 0x299f31d0},
     {0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}},
}};

/// Lowest index of the minimum.
template <typename T>
std::size_t argmin(const std::vector<T>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[best]) best = i;
  }
  return best;
}

/// Cumulative Follow-the-Leader loss (lowest index on ties) over a loss sequence.
inline double follow_the_leader_loss(const std::vector<std::vector<double>>& losses) {
  if (losses.empty()) return 0.0;
  std::vector<double> sums(losses.front().size(), 0.0);
  double total = 0.0;
  for (const auto& s : losses) {
    total += s[argmin(sums)];
    for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += s[i];
  }
  return total;
}

}  // namespace oracle
