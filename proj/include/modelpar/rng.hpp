// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace modelpar {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_pair(std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL));
}

// Streams are keyed by (purpose, index, round) so that no two consumers share
// state and results never depend on thread interleaving.
enum class StreamTag : std::uint64_t {
  kWorker = 1,
  kCoordinator = 2,
  kInit = 3,
  kData = 4,
};

inline std::uint64_t stream_seed(std::uint64_t seed, StreamTag tag, std::uint64_t index,
                                 std::uint64_t round) noexcept {
  return seed ^ hash_pair(hash_pair(static_cast<std::uint64_t>(tag), index), round);
}

/// Per-worker, per-round stream: seed xor hash(worker, round).
inline Rng worker_stream(std::uint64_t seed, std::uint64_t worker, std::uint64_t round) {
  return Rng(stream_seed(seed, StreamTag::kWorker, worker, round));
}

inline Rng coordinator_stream(std::uint64_t seed, std::uint64_t round) {
  return Rng(stream_seed(seed, StreamTag::kCoordinator, 0, round));
}

inline Rng init_stream(std::uint64_t seed) { return Rng(stream_seed(seed, StreamTag::kInit, 0, 0)); }

/// Uniform double in [0, 1) from the top 53 bits; identical across standard libraries.
inline double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection-free multiply-shift (n > 0).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) noexcept {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

}  // namespace modelpar
