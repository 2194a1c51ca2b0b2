// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "modelpar/errors.hpp"
#include "modelpar/rng.hpp"

namespace modelpar::mf {

struct Rating {
  std::uint32_t row;
  std::uint32_t col;
  double value;

  friend bool operator==(const Rating&, const Rating&) = default;
};

/// Observed entries of an N x M matrix.
struct SparseRatings {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Rating> entries;

  void validate() const {
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& e : entries) {
      if (e.row >= rows || e.col >= cols)
        throw DataError("ratings: entry (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                        ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
      if (!std::isfinite(e.value)) throw DataError("ratings: non-finite value");
      if (!seen.emplace(e.row, e.col).second)
        throw DataError("ratings: duplicate entry (" + std::to_string(e.row) + "," + std::to_string(e.col) + ")");
    }
  }

  friend bool operator==(const SparseRatings&, const SparseRatings&) = default;
};

/// Header `N=<int> M=<int>`, then `i<TAB>j<TAB>value` per line (0-based).
inline SparseRatings read_ratings(std::istream& in, const std::string& source = "<ratings>") {
  SparseRatings out;
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ":1: missing header 'N=<int> M=<int>'");
  {
    std::istringstream hs(line);
    std::string a, b, extra;
    hs >> a >> b;
    if (a.rfind("N=", 0) != 0 || b.rfind("M=", 0) != 0 || (hs >> extra))
      throw DataError(source + ":1: malformed header, expected 'N=<int> M=<int>'");
    try {
      std::size_t pos = 0;
      out.rows = std::stoull(a.substr(2), &pos);
      if (pos != a.size() - 2) throw std::invalid_argument("");
      out.cols = std::stoull(b.substr(2), &pos);
      if (pos != b.size() - 2) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw DataError(source + ":1: malformed header, expected 'N=<int> M=<int>'");
    }
  }
  std::size_t lineno = 1;
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    std::istringstream ls(line);
    long long i = -1, j = -1;
    std::string value_text, extra;
    if (!(ls >> i >> j >> value_text) || (ls >> extra)) throw DataError(where + "expected 'i<TAB>j<TAB>value'");
    double v = 0;
    auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), v);
    if (ec != std::errc() || ptr != value_text.data() + value_text.size())
      throw DataError(where + "malformed value '" + value_text + "'");
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= out.rows || static_cast<std::size_t>(j) >= out.cols)
      throw DataError(where + "index out of range");
    const auto key = std::make_pair(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    if (!seen.insert(key).second) throw DataError(where + "duplicate entry");
    out.entries.push_back({key.first, key.second, v});
  }
  return out;
}

inline SparseRatings load_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open ratings file");
  return read_ratings(in, path);
}

inline void write_ratings(std::ostream& out, const SparseRatings& r) {
  out << "N=" << r.rows << " M=" << r.cols << '\n';
  char buf[64];
  for (const auto& e : r.entries) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, e.value);
    out << e.row << '\t' << e.col << '\t' << std::string_view(buf, end - buf) << '\n';
  }
}

/// Random low-rank matrix (rank 3, plus small noise) observed with
/// probability `density` per entry.
inline SparseRatings generate_ratings(std::size_t rows, std::size_t cols, double density, std::uint64_t seed) {
  constexpr std::size_t kTrueRank = 3;
  Rng rng(stream_seed(seed, StreamTag::kData, 1, 0));
  std::vector<double> u(rows * kTrueRank), v(cols * kTrueRank);
  for (auto& x : u) x = uniform01(rng);
  for (auto& x : v) x = uniform01(rng);
  SparseRatings out;
  out.rows = rows;
  out.cols = cols;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      if (uniform01(rng) >= density) continue;
      double a = 0.0;
      for (std::size_t k = 0; k < kTrueRank; ++k) a += u[i * kTrueRank + k] * v[j * kTrueRank + k];
      a += 0.1 * (uniform01(rng) - 0.5);
      out.entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), a});
    }
  return out;
}

}  // namespace modelpar::mf
