// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "modelpar/errors.hpp"
#include "modelpar/rng.hpp"

namespace modelpar::lasso {

/// One column of X: sorted row indices and their values.
struct SparseColumn {
  std::vector<std::uint32_t> rows;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return rows.size(); }
  double squared_norm() const noexcept {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }
  friend bool operator==(const SparseColumn&, const SparseColumn&) = default;
};

inline double sparse_dot(const SparseColumn& a, const SparseColumn& b) noexcept {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.rows.size() && j < b.rows.size()) {
    if (a.rows[i] < b.rows[j]) ++i;
    else if (b.rows[j] < a.rows[i]) ++j;
    else s += a.values[i++] * b.values[j++];
  }
  return s;
}

/// n x J matrix stored by column.
struct DesignMatrix {
  std::size_t rows = 0;
  std::vector<SparseColumn> columns;

  std::size_t cols() const noexcept { return columns.size(); }

  double dot(std::size_t j, std::size_t k) const { return sparse_dot(columns.at(j), columns.at(k)); }

  double column_dot(std::size_t j, std::span<const double> v) const {
    const auto& c = columns.at(j);
    double s = 0.0;
    for (std::size_t t = 0; t < c.nnz(); ++t) s += c.values[t] * v[c.rows[t]];
    return s;
  }

  /// X β (dense result of length n).
  std::vector<double> multiply(std::span<const double> beta) const {
    std::vector<double> out(rows, 0.0);
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (beta[j] == 0.0) continue;
      const auto& c = columns[j];
      for (std::size_t t = 0; t < c.nnz(); ++t) out[c.rows[t]] += c.values[t] * beta[j];
    }
    return out;
  }

  void validate() const {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const auto& c = columns[j];
      if (c.rows.size() != c.values.size()) throw DataError("design: column " + std::to_string(j) + " is ragged");
      for (std::size_t t = 0; t < c.nnz(); ++t) {
        if (c.rows[t] >= rows)
          throw DataError("design: column " + std::to_string(j) + " has row " + std::to_string(c.rows[t]) +
                          " >= n=" + std::to_string(rows));
        if (t > 0 && c.rows[t] <= c.rows[t - 1])
          throw DataError("design: column " + std::to_string(j) + " rows not strictly increasing");
        if (!std::isfinite(c.values[t])) throw DataError("design: non-finite value in column " + std::to_string(j));
      }
    }
  }

  friend bool operator==(const DesignMatrix&, const DesignMatrix&) = default;
};

/// Scales every nonzero column to unit L2 norm and centers y.
inline void standardize(DesignMatrix& x, std::vector<double>& y) {
  for (auto& c : x.columns) {
    const double norm = std::sqrt(c.squared_norm());
    if (norm > 0.0)
      for (auto& v : c.values) v /= norm;
  }
  if (!y.empty()) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    for (auto& v : y) v -= mean;
  }
}

/// ½‖y − Xβ‖² + λ Σ|β_j|.
inline double lasso_objective(const DesignMatrix& x, std::span<const double> y, std::span<const double> beta,
                              double lambda) {
  const auto fit = x.multiply(beta);
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) loss += (y[i] - fit[i]) * (y[i] - fit[i]);
  double l1 = 0.0;
  for (double b : beta) l1 += std::abs(b);
  return 0.5 * loss + lambda * l1;
}

/// max_j |x_jᵀ y|: the smallest λ for which β = 0 is optimal.
inline double lambda_max(const DesignMatrix& x, std::span<const double> y) {
  double m = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) m = std::max(m, std::abs(x.column_dot(j, y)));
  return m;
}

namespace detail {
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline double parse_double(std::string_view text, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw DataError(where + "malformed number '" + std::string(text) + "'");
  return v;
}

template <typename Int>
inline Int parse_int(std::string_view text, const std::string& where) {
  Int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw DataError(where + "malformed integer '" + std::string(text) + "'");
  return v;
}
}  // namespace detail

/// Header `n=<int> J=<int>`, then one line per column: `j: i1:v1 i2:v2 ...`.
inline void write_design(std::ostream& out, const DesignMatrix& x) {
  out << "n=" << x.rows << " J=" << x.cols() << '\n';
  for (std::size_t j = 0; j < x.cols(); ++j) {
    out << j << ':';
    const auto& c = x.columns[j];
    for (std::size_t t = 0; t < c.nnz(); ++t) out << ' ' << c.rows[t] << ':' << detail::format_double(c.values[t]);
    out << '\n';
  }
}

inline DesignMatrix read_design(std::istream& in, const std::string& source = "<design>") {
  DesignMatrix x;
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ":1: missing header 'n=<int> J=<int>'");
  std::size_t cols = 0;
  {
    std::istringstream hs(line);
    std::string a, b, extra;
    hs >> a >> b;
    if (a.rfind("n=", 0) != 0 || b.rfind("J=", 0) != 0 || (hs >> extra))
      throw DataError(source + ":1: malformed header, expected 'n=<int> J=<int>'");
    x.rows = detail::parse_int<std::size_t>(std::string_view(a).substr(2), source + ":1: ");
    cols = detail::parse_int<std::size_t>(std::string_view(b).substr(2), source + ":1: ");
  }
  x.columns.resize(cols);
  std::vector<bool> seen(cols, false);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head.empty() || head.back() != ':') throw DataError(where + "expected 'j:' column label");
    const auto j = detail::parse_int<std::size_t>(std::string_view(head).substr(0, head.size() - 1), where);
    if (j >= cols) throw DataError(where + "column " + std::to_string(j) + " >= J=" + std::to_string(cols));
    if (seen[j]) throw DataError(where + "column " + std::to_string(j) + " listed twice");
    seen[j] = true;
    auto& c = x.columns[j];
    std::string item;
    while (ls >> item) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw DataError(where + "expected 'row:value', got '" + item + "'");
      const auto i = detail::parse_int<std::uint32_t>(std::string_view(item).substr(0, colon), where);
      if (i >= x.rows) throw DataError(where + "row " + std::to_string(i) + " >= n=" + std::to_string(x.rows));
      if (!c.rows.empty() && i <= c.rows.back()) throw DataError(where + "row indices must be increasing");
      c.rows.push_back(i);
      c.values.push_back(detail::parse_double(std::string_view(item).substr(colon + 1), where));
    }
  }
  for (std::size_t j = 0; j < cols; ++j)
    if (!seen[j]) throw DataError(source + ": column " + std::to_string(j) + " missing (header says J=" +
                                  std::to_string(cols) + ")");
  return x;
}

inline void write_vector(std::ostream& out, std::span<const double> v) {
  for (double x : v) out << detail::format_double(x) << '\n';
}

inline std::vector<double> read_vector(std::istream& in, const std::string& source = "<vector>") {
  std::vector<double> v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    v.push_back(detail::parse_double(line, source + ":" + std::to_string(lineno) + ": "));
  }
  return v;
}

inline DesignMatrix load_design(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open design-matrix file");
  return read_design(in, path);
}

inline std::vector<double> load_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open vector file");
  return read_vector(in, path);
}

struct SyntheticLasso {
  DesignMatrix x;
  std::vector<double> y;
  std::vector<double> true_beta;
};

struct SyntheticOptions {
  /// Nonzeros per feature; defaults to min(25, n).
  std::optional<std::size_t> nonzeros;
  double noise_sigma = 0.1;
  double signal_fraction = 0.01;
};

/// Sparse features with adjacent-feature correlation. x_1 gets Unif(0,1)
/// noise on a random support; each later feature either gets fresh noise
/// (probability 0.9) on a fresh support, or reuses its predecessor's support
/// with values 0.9 ε_{j−1} + 0.1 Unif(0,1). Columns are then scaled to unit
/// norm and y = Xβ* + N(0, σ²), centered, with ⌈signal_fraction·J⌉ entries
/// of β* set to ±1.
inline SyntheticLasso gen_synthetic(std::size_t n, std::size_t features, std::uint64_t seed,
                                    const SyntheticOptions& opts = {}) {
  if (n < 1 || features < 1) throw ConfigError("gen_synthetic: n and J must be >= 1");
  const std::size_t nnz = opts.nonzeros.value_or(std::min<std::size_t>(25, n));
  if (nnz > n)
    throw ConfigError("gen_synthetic: nonzeros per feature (" + std::to_string(nnz) + ") exceeds n=" +
                      std::to_string(n));
  Rng rng(stream_seed(seed, StreamTag::kData, 2, 0));

  SyntheticLasso out;
  out.x.rows = n;
  out.x.columns.resize(features);
  std::vector<std::uint32_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = static_cast<std::uint32_t>(i);

  auto fresh_support = [&] {
    // partial Fisher-Yates: first nnz entries of pool become a uniform subset
    for (std::size_t t = 0; t < nnz; ++t) std::swap(pool[t], pool[t + uniform_index(rng, n - t)]);
    std::vector<std::uint32_t> rows(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(nnz));
    std::sort(rows.begin(), rows.end());
    return rows;
  };

  for (std::size_t j = 0; j < features; ++j) {
    auto& c = out.x.columns[j];
    if (j == 0 || uniform01(rng) < 0.9) {
      c.rows = fresh_support();
      c.values.resize(nnz);
      for (auto& v : c.values) v = uniform01(rng);
    } else {
      const auto& prev = out.x.columns[j - 1];
      c.rows = prev.rows;
      c.values.resize(nnz);
      for (std::size_t t = 0; t < nnz; ++t) c.values[t] = 0.9 * prev.values[t] + 0.1 * uniform01(rng);
    }
  }
  // Unnormalized values above are the ε_j; scale afterwards so chaining sees raw noise.
  for (auto& c : out.x.columns) {
    const double norm = std::sqrt(c.squared_norm());
    if (norm > 0.0)
      for (auto& v : c.values) v /= norm;
  }

  out.true_beta.assign(features, 0.0);
  const auto signals = static_cast<std::size_t>(std::ceil(opts.signal_fraction * static_cast<double>(features)));
  std::vector<std::size_t> idx(features);
  for (std::size_t j = 0; j < features; ++j) idx[j] = j;
  for (std::size_t t = 0; t < std::min(signals, features); ++t) {
    std::swap(idx[t], idx[t + uniform_index(rng, features - t)]);
    out.true_beta[idx[t]] = uniform01(rng) < 0.5 ? -1.0 : 1.0;
  }

  out.y = out.x.multiply(out.true_beta);
  std::normal_distribution<double> noise(0.0, opts.noise_sigma);
  for (auto& v : out.y) v += noise(rng);
  double mean = 0.0;
  for (double v : out.y) mean += v;
  mean /= static_cast<double>(n);
  for (auto& v : out.y) v -= mean;
  return out;
}

}  // namespace modelpar::lasso
