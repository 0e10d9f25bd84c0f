#ifndef COPS_COP_HPP
#define COPS_COP_HPP

// The comparison procedure: evaluate two points K times each and return the
// fraction of won pairwise comparisons. The counting kernel sorts one sample
// list and rank-counts the other, O(K log K), bit-identical to the O(K^2)
// double-loop definition.

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "cops/errors.hpp"
#include "cops/problem.hpp"
#include "cops/random.hpp"

namespace cops {

/// A comparison frequency f in [0,1] with its exact pair-win count.
struct FrequencyEstimate {
  double value = 0.0;               // win_count / K^2, divided once
  int samples_per_point = 0;        // K
  std::uint64_t win_count = 0;      // #{(i,j) : x_i < y_j}, exact
  std::vector<double> pair_x;       // the compared pair (x, y)
  std::vector<double> pair_y;
};

/// Fraction of pairs (i,j) with samples_x[i] < samples_y[j]. Ties count as
/// losses (strict inequality); with continuous noise they have probability 0.
inline FrequencyEstimate pairwise_win_fraction(std::span<const double> samples_x,
                                               std::span<const double> samples_y) {
  if (samples_x.empty() || samples_x.size() != samples_y.size())
    throw contract_error("pairwise_win_fraction: sample lists must be non-empty and of equal length");
  const std::size_t k = samples_x.size();

  std::vector<double> sorted_y(samples_y.begin(), samples_y.end());
  std::sort(sorted_y.begin(), sorted_y.end());

  std::uint64_t wins = 0;
  for (double x : samples_x) {
    // y values strictly greater than x
    const auto it = std::upper_bound(sorted_y.begin(), sorted_y.end(), x);
    wins += static_cast<std::uint64_t>(sorted_y.end() - it);
  }

  FrequencyEstimate est;
  est.samples_per_point = static_cast<int>(k);
  est.win_count = wins;
  est.value = static_cast<double>(wins) / (static_cast<double>(k) * static_cast<double>(k));
  return est;
}

/// COP: K fresh noisy evaluations of x and of y (interleaved, matching the
/// procedure's loop), then the pairwise win fraction. Consumes exactly 2K.
template <class Oracle>
FrequencyEstimate cop(int k, std::span<const double> x, std::span<const double> y, Oracle&& oracle,
                      RandomStream& stream, EvaluationCounter& counter) {
  if (k < 1) throw contract_error("cop: K must be >= 1");
  if (counter.remaining() < 2 * static_cast<std::uint64_t>(k))
    throw budget_error("cop: needs 2K evaluations, budget has " + std::to_string(counter.remaining()));

  std::vector<double> fx(k), fy(k);
  for (int i = 0; i < k; ++i) {
    fx[i] = oracle(x, stream, counter);
    fy[i] = oracle(y, stream, counter);
  }
  FrequencyEstimate est = pairwise_win_fraction(fx, fy);
  est.pair_x.assign(x.begin(), x.end());
  est.pair_y.assign(y.begin(), y.end());
  return est;
}

/// Scalar-point overload for one-dimensional oracles.
template <class Oracle1D>
FrequencyEstimate cop1d(int k, double x, double y, Oracle1D&& oracle, RandomStream& stream,
                        EvaluationCounter& counter) {
  if (k < 1) throw contract_error("cop: K must be >= 1");
  if (counter.remaining() < 2 * static_cast<std::uint64_t>(k))
    throw budget_error("cop: needs 2K evaluations, budget has " + std::to_string(counter.remaining()));

  std::vector<double> fx(k), fy(k);
  for (int i = 0; i < k; ++i) {
    fx[i] = oracle(x, stream, counter);
    fy[i] = oracle(y, stream, counter);
  }
  FrequencyEstimate est = pairwise_win_fraction(fx, fy);
  est.pair_x = {x};
  est.pair_y = {y};
  return est;
}

}  // namespace cops

#endif  // COPS_COP_HPP
