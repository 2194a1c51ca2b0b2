// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "modelpar/errors.hpp"
#include "modelpar/mf/ratings.hpp"

namespace modelpar::mf {

/// One observed entry seen from the side of the variable being updated:
/// `factor` is the fixed row/column vector on the other side, `residual` is
/// a_ij - w_i · h_j.
struct ObservedTerm {
  std::span<const double> factor;
  double residual;
};

/// Numerator / denominator partial sums for coordinate k of one row or
/// column over a worker's observed entries:
///   a = Σ (r + f_k x_k) f_k,  b = Σ f_k².
inline std::pair<double, double> partial_sums(std::span<const ObservedTerm> terms, std::size_t k, double current) {
  double a = 0.0, b = 0.0;
  for (const auto& t : terms) {
    const double f = t.factor[k];
    a += (t.residual + f * current) * f;
    b += f * f;
  }
  return {a, b};
}

/// a / (λ + b) summed over every worker's partials.
inline double aggregate(std::span<const std::pair<double, double>> partials, double lambda) {
  double a = 0.0, b = 0.0;
  for (const auto& [pa, pb] : partials) {
    a += pa;
    b += pb;
  }
  return a / (lambda + b);
}

/// Sufficient statistics for updating all K coordinates of one row/column in
/// sequence: g = Σ r f, gram = Σ f fᵀ (row-major K x K).
struct BlockPartial {
  std::vector<double> g;
  std::vector<double> gram;

  explicit BlockPartial(std::size_t rank = 0) : g(rank, 0.0), gram(rank * rank, 0.0) {}

  void accumulate(std::span<const double> factor, double residual) {
    const std::size_t rank = g.size();
    for (std::size_t k = 0; k < rank; ++k) {
      g[k] += residual * factor[k];
      for (std::size_t l = 0; l < rank; ++l) gram[k * rank + l] += factor[k] * factor[l];
    }
  }

  BlockPartial& operator+=(const BlockPartial& o) {
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += o.g[k];
    for (std::size_t k = 0; k < gram.size(); ++k) gram[k] += o.gram[k];
    return *this;
  }
};

/// Ascending-k coordinate updates of one row/column, each seeing the
/// residuals left by the previous k. The residual refresh between k steps is
/// folded in through the Gram matrix:
///   a_k = g_k + x_k G_kk - Σ_{l<k} Δ_l G_lk,  x_k ← a_k / (λ + G_kk).
inline std::vector<double> solve_block(std::span<const double> current, const BlockPartial& stats, double lambda) {
  const std::size_t rank = current.size();
  if (stats.g.size() != rank) throw DataError("mf: block partial rank mismatch");
  std::vector<double> next(current.begin(), current.end());
  std::vector<double> delta(rank, 0.0);
  for (std::size_t k = 0; k < rank; ++k) {
    double a = stats.g[k] + current[k] * stats.gram[k * rank + k];
    for (std::size_t l = 0; l < k; ++l) a -= delta[l] * stats.gram[l * rank + k];
    next[k] = a / (lambda + stats.gram[k * rank + k]);
    delta[k] = next[k] - current[k];
  }
  return next;
}

/// Σ (a_ij - w_i·h_j)² + λ(‖W‖² + ‖H‖²). W is N x K row-major; H is stored
/// column-major as M vectors of length K.
template <typename RowOf, typename ColOf>
double objective(const SparseRatings& ratings, std::size_t rank, double lambda, RowOf&& w_row, ColOf&& h_col) {
  double loss = 0.0;
  for (const auto& e : ratings.entries) {
    const auto& w = w_row(e.row);
    const auto& h = h_col(e.col);
    double pred = 0.0;
    for (std::size_t k = 0; k < rank; ++k) pred += w[k] * h[k];
    const double r = e.value - pred;
    loss += r * r;
  }
  double reg = 0.0;
  for (std::size_t i = 0; i < ratings.rows; ++i)
    for (double x : w_row(i)) reg += x * x;
  for (std::size_t j = 0; j < ratings.cols; ++j)
    for (double x : h_col(j)) reg += x * x;
  return loss + lambda * reg;
}

}  // namespace modelpar::mf
