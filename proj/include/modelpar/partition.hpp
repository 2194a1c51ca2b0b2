// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace modelpar {

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return begin == end; }
  bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Splits [0, n) into `parts` contiguous ranges whose sizes differ by at most
/// one; the first n % parts ranges get the larger size.
inline std::vector<IndexRange> partition_uniform(std::size_t n, std::size_t parts) {
  if (parts == 0) throw std::invalid_argument("partition_uniform: parts must be >= 1");
  std::vector<IndexRange> ranges;
  ranges.reserve(parts);
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  std::size_t begin = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    ranges.push_back({begin, begin + len});
    begin += len;
  }
  return ranges;
}

/// Index of the range of partition_uniform(n, parts) that holds `i` (i < n).
inline std::size_t partition_owner(std::size_t i, std::size_t n, std::size_t parts) noexcept {
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  const std::size_t split = extra * (base + 1);
  if (i < split) return i / (base + 1);
  return extra + (i - split) / base;
}

}  // namespace modelpar
