// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "modelpar/errors.hpp"
#include "modelpar/rng.hpp"

namespace modelpar::lasso {

/// sign(v) · max(|v| − λ, 0).
inline double soft_threshold(double v, double lambda) noexcept {
  if (v > lambda) return v - lambda;
  if (v < -lambda) return v + lambda;
  return 0.0;
}

/// c_j = (δ_j + η) / Σ_k (δ_k + η), δ_j the magnitude of coordinate j's most
/// recent change.
inline std::vector<double> priority_weights(std::span<const double> last_delta, double eta) {
  if (!(eta > 0.0)) throw ConfigError("priority_weights: eta must be > 0");
  std::vector<double> c(last_delta.size());
  double total = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    c[j] = last_delta[j] + eta;
    total += c[j];
  }
  for (auto& x : c) x /= total;
  return c;
}

/// Draws `count` distinct coordinates one at a time from `weights`,
/// renormalizing over the remaining coordinates after each draw.
inline std::vector<std::size_t> draw_candidates(std::span<const double> weights, std::size_t count, Rng& rng) {
  const std::size_t n = weights.size();
  if (count > n)
    throw ConfigError("draw_candidates: requested " + std::to_string(count) + " candidates from " +
                      std::to_string(n) + " coordinates");
  std::vector<std::size_t> out;
  out.reserve(count);
  if (count == n) {
    out.resize(n);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  std::vector<double> w(weights.begin(), weights.end());
  double remaining = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t a = 0; a < count; ++a) {
    const double u = uniform01(rng) * remaining;
    double acc = 0.0;
    std::size_t pick = n;
    std::size_t last = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (w[j] <= 0.0) continue;
      last = j;
      acc += w[j];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    if (pick == n) pick = last;
    if (pick == n) {  // every remaining weight is zero: take the lowest unused index
      for (std::size_t j = 0; j < n; ++j)
        if (std::find(out.begin(), out.end(), j) == out.end()) {
          pick = j;
          break;
        }
    }
    out.push_back(pick);
    remaining -= w[pick];
    w[pick] = 0.0;
    if (remaining <= 0.0) remaining = std::accumulate(w.begin(), w.end(), 0.0);
  }
  return out;
}

/// Greedy ρ-safe subset: visit candidates by descending priority (ties keep
/// draw order) and accept j if |x_jᵀ x_k| < ρ for every accepted k, stopping
/// at `limit`. The first candidate is always accepted. `dot(j, k)` returns
/// x_jᵀ x_k.
template <typename Dot>
std::vector<std::size_t> dependency_filter(std::span<const std::size_t> candidates,
                                           std::span<const double> priority, double rho, std::size_t limit,
                                           Dot&& dot) {
  std::vector<std::size_t> order(candidates.begin(), candidates.end());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return priority[a] > priority[b]; });
  std::vector<std::size_t> accepted;
  for (std::size_t j : order) {
    if (accepted.size() >= limit) break;
    bool safe = true;
    for (std::size_t k : accepted)
      if (!(std::abs(dot(j, k)) < rho)) {
        safe = false;
        break;
      }
    if (safe || accepted.empty()) accepted.push_back(j);
  }
  return accepted;
}

}  // namespace modelpar::lasso
