// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "modelpar/engine.hpp"
#include "modelpar/mf/mf_app.hpp"

namespace modelpar::mf {
namespace {

using Matrix = std::vector<std::vector<double>>;  // row-major, rows of length K

TEST(RoundRobin, Examples) {
  const auto a = roundrobin_schedule(1, 2);
  EXPECT_TRUE(a.rows);
  EXPECT_EQ(a.block, 0u);
  const auto b = roundrobin_schedule(3, 2);
  EXPECT_FALSE(b.rows);
  EXPECT_EQ(b.block, 0u);
  std::vector<std::pair<bool, std::size_t>> seq;
  for (std::size_t c = 1; c <= 4; ++c) {
    const auto s = roundrobin_schedule(c, 2);
    seq.emplace_back(s.rows, s.block);
  }
  EXPECT_EQ(seq, (std::vector<std::pair<bool, std::size_t>>{{true, 0}, {true, 1}, {false, 0}, {false, 1}}));
  EXPECT_THROW(roundrobin_schedule(0, 2), ConfigError);
  EXPECT_THROW(roundrobin_schedule(5, 2), ConfigError);
}

TEST(MfApp, CounterWrapsAfterFullCycle) {
  const auto r = generate_ratings(6, 5, 0.6, 1);
  MfApp app(r, {2, 0.05, 0});
  Engine<MfApp> engine(app, {2, 0, 1});
  const auto counter_id = app.h_id(r.cols);  // counter table follows H
  std::vector<double> seen;
  for (int i = 0; i < 5; ++i) {
    seen.push_back(engine.store().get(counter_id)[0]);
    engine.run_round();
  }
  EXPECT_EQ(seen, (std::vector<double>{1, 2, 3, 4, 1}));
}

TEST(PartialSums, EmptyAndSingleTerm) {
  EXPECT_EQ(partial_sums({}, 0, 1.5), (std::pair<double, double>{0.0, 0.0}));
  const std::vector<double> f{1.0, 0.0};
  const std::vector<ObservedTerm> one{{f, 2.0}};
  EXPECT_EQ(partial_sums(one, 0, 0.0), (std::pair<double, double>{2.0, 1.0}));
}

TEST(Aggregate, ZeroPartialsShrinkToZero) {
  const std::vector<std::pair<double, double>> zeros(3, {0.0, 0.0});
  EXPECT_EQ(aggregate(zeros, 0.05), 0.0);
}

struct Small {
  std::size_t n = 4, m = 3, rank = 2;
  double lambda = 0.05;
  Matrix a;                     // dense, NaN = unobserved
  Matrix w, h;                  // w: N x K, h: M x K
};

Small small_instance(std::uint64_t seed) {
  Small s;
  Rng rng(seed);
  s.a.assign(s.n, std::vector<double>(s.m));
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t j = 0; j < s.m; ++j) s.a[i][j] = uniform01(rng) < 0.75 ? 2.0 * uniform01(rng) : NAN;
  s.a[0][0] = 1.0;
  s.w.assign(s.n, std::vector<double>(s.rank));
  s.h.assign(s.m, std::vector<double>(s.rank));
  for (auto& row : s.w)
    for (auto& x : row) x = uniform01(rng);
  for (auto& row : s.h)
    for (auto& x : row) x = uniform01(rng);
  return s;
}

double dense_residual(const Small& s, std::size_t i, std::size_t j) {
  double pred = 0;
  for (std::size_t k = 0; k < s.rank; ++k) pred += s.w[i][k] * s.h[j][k];
  return s.a[i][j] - pred;
}

// Closed-form coordinate update for column j applied k = 0..K-1, residuals recomputed from scratch.
std::vector<double> dense_update_h(Small s, std::size_t j) {
  for (std::size_t k = 0; k < s.rank; ++k) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < s.n; ++i) {
      if (std::isnan(s.a[i][j])) continue;
      num += (dense_residual(s, i, j) + s.w[i][k] * s.h[j][k]) * s.w[i][k];
      den += s.w[i][k] * s.w[i][k];
    }
    s.h[j][k] = num / (s.lambda + den);
  }
  return s.h[j];
}

std::vector<double> dense_update_w(Small s, std::size_t i) {
  for (std::size_t k = 0; k < s.rank; ++k) {
    double num = 0, den = 0;
    for (std::size_t j = 0; j < s.m; ++j) {
      if (std::isnan(s.a[i][j])) continue;
      num += (dense_residual(s, i, j) + s.w[i][k] * s.h[j][k]) * s.h[j][k];
      den += s.h[j][k] * s.h[j][k];
    }
    s.w[i][k] = num / (s.lambda + den);
  }
  return s.w[i];
}

TEST(CoordinateUpdate, ColumnMatchesDenseOracle) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Small s = small_instance(seed);
    for (std::size_t j = 0; j < s.m; ++j) {
      // Two workers split the rows {0,1} / {2,3}.
      BlockPartial total(s.rank);
      std::vector<BlockPartial> parts(2, BlockPartial(s.rank));
      for (std::size_t i = 0; i < s.n; ++i)
        if (!std::isnan(s.a[i][j])) parts[i / 2].accumulate(s.w[i], dense_residual(s, i, j));
      for (const auto& p : parts) total += p;
      const auto got = solve_block(s.h[j], total, s.lambda);
      const auto want = dense_update_h(s, j);
      for (std::size_t k = 0; k < s.rank; ++k) EXPECT_NEAR(got[k], want[k], 1e-12);

      // First coordinate via scalar partial sums aggregated over workers.
      std::vector<std::pair<double, double>> scal;
      for (int p = 0; p < 2; ++p) {
        std::vector<ObservedTerm> terms;
        for (std::size_t i = 2 * p; i < 2 * p + 2; ++i)
          if (!std::isnan(s.a[i][j])) terms.push_back({s.w[i], dense_residual(s, i, j)});
        scal.push_back(partial_sums(terms, 0, s.h[j][0]));
      }
      EXPECT_NEAR(aggregate(scal, s.lambda), want[0], 1e-12);
    }
  }
}

TEST(CoordinateUpdate, RowMatchesDenseOracle) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Small s = small_instance(seed);
    for (std::size_t i = 0; i < s.n; ++i) {
      BlockPartial stats(s.rank);
      for (std::size_t j = 0; j < s.m; ++j)
        if (!std::isnan(s.a[i][j])) stats.accumulate(s.h[j], dense_residual(s, i, j));
      const auto got = solve_block(s.w[i], stats, s.lambda);
      const auto want = dense_update_w(s, i);
      for (std::size_t k = 0; k < s.rank; ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
    }
  }
}

SparseRatings to_ratings(const Small& s) {
  SparseRatings r;
  r.rows = s.n;
  r.cols = s.m;
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t j = 0; j < s.m; ++j)
      if (!std::isnan(s.a[i][j])) r.entries.push_back({uint32_t(i), uint32_t(j), s.a[i][j]});
  return r;
}

double dense_objective(const Small& s) {
  double f = 0;
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t j = 0; j < s.m; ++j)
      if (!std::isnan(s.a[i][j])) f += dense_residual(s, i, j) * dense_residual(s, i, j);
  for (const auto* mat : {&s.w, &s.h})
    for (const auto& row : *mat)
      for (double x : row) f += s.lambda * x * x;
  return f;
}

TEST(Objective, Examples) {
  Small s = small_instance(3);
  const auto r = to_ratings(s);
  auto w_of = [&](std::size_t i) -> const std::vector<double>& { return s.w[i]; };
  auto h_of = [&](std::size_t j) -> const std::vector<double>& { return s.h[j]; };
  EXPECT_NEAR(objective(r, s.rank, s.lambda, w_of, h_of), dense_objective(s), 1e-12);

  Small zero = s;
  for (auto& row : zero.w) std::fill(row.begin(), row.end(), 0.0);
  for (auto& row : zero.h) std::fill(row.begin(), row.end(), 0.0);
  double sq = 0;
  for (const auto& e : r.entries) sq += e.value * e.value;
  EXPECT_NEAR(objective(r, 2, 7.0, [&](std::size_t i) -> auto& { return zero.w[i]; },
                        [&](std::size_t j) -> auto& { return zero.h[j]; }),
              sq, 1e-12);

  // Exact rank-2 factorization with no regularization.
  SparseRatings exact = r;
  for (auto& e : exact.entries) {
    e.value = 0;
    for (std::size_t k = 0; k < 2; ++k) e.value += s.w[e.row][k] * s.h[e.col][k];
  }
  EXPECT_NEAR(objective(exact, 2, 0.0, w_of, h_of), 0.0, 1e-24);
}

TEST(MfApp, OneRoundMatchesDenseOracle) {
  const Small base = small_instance(4);
  const auto r = to_ratings(base);
  MfApp app(r, {2, base.lambda, 0});
  Engine<MfApp> engine(app, {2, 0, 8});
  Small s = base;
  std::tie(s.w, s.h) = app.factors(engine.store());
  // Round 1 updates W rows of block 0; round 2 block 1; then H blocks.
  for (int round = 0; round < 4; ++round) {
    engine.run_round();
    Small want = s;
    if (round < 2) {
      for (std::size_t i = app.row_blocks()[round].begin; i < app.row_blocks()[round].end; ++i)
        want.w[i] = dense_update_w(s, i);
    } else {
      const auto blk = app.col_blocks()[round - 2];
      for (std::size_t j = blk.begin; j < blk.end; ++j) want.h[j] = dense_update_h(s, j);
    }
    const auto [w, h] = app.factors(engine.store());
    for (std::size_t i = 0; i < s.n; ++i)
      for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(w[i][k], want.w[i][k], 1e-12);
    for (std::size_t j = 0; j < s.m; ++j)
      for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(h[j][k], want.h[j][k], 1e-12);
    s.w = w;
    s.h = h;
  }
}

TEST(MfApp, ResidualCacheStaysCoherent) {
  const auto r = generate_ratings(30, 20, 0.3, 5);
  for (std::size_t workers : {1u, 3u}) {
    MfApp app(r, {4, 0.05, 0});
    Engine<MfApp> engine(app, {workers, 0, 5});
    for (int round = 0; round < 24; ++round) {
      engine.run_round();
      EXPECT_LE(app.residual_drift(engine.store()), 1e-9);
    }
  }
}

TEST(MfApp, ObjectiveNonIncreasingPerCycle) {
  const auto r = generate_ratings(40, 30, 0.3, 6);
  MfApp app(r, {3, 0.05, 0});
  Engine<MfApp> engine(app, {2, 0, 6});
  double prev = app.objective(engine.store());
  for (int cycle = 0; cycle < 10; ++cycle) {
    for (int k = 0; k < 4; ++k) engine.run_round();
    const double cur = app.objective(engine.store());
    EXPECT_LE(cur, prev + 1e-12 * std::abs(prev));
    prev = cur;
  }
}

TEST(MfApp, SameResultForAnyWorkerCount) {
  const auto r = generate_ratings(25, 18, 0.35, 2);
  std::vector<std::vector<double>> ref_w, ref_h;
  for (std::size_t workers : {1u, 2u, 4u}) {
    MfApp app(r, {3, 0.05, 4});
    Engine<MfApp> engine(app, {workers, 0, 2});
    for (int round = 0; round < 16; ++round) engine.run_round();
    auto [w, h] = app.factors(engine.store());
    if (workers == 1) {
      ref_w = w;
      ref_h = h;
      continue;
    }
    for (std::size_t i = 0; i < w.size(); ++i)
      for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(w[i][k], ref_w[i][k], 1e-10 * std::abs(ref_w[i][k]) + 1e-300);
    for (std::size_t j = 0; j < h.size(); ++j)
      for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(h[j][k], ref_h[j][k], 1e-10 * std::abs(ref_h[j][k]) + 1e-300);
  }
}

TEST(Ratings, RoundTripAndErrors) {
  const auto r = generate_ratings(7, 5, 0.5, 3);
  std::stringstream ss;
  write_ratings(ss, r);
  EXPECT_EQ(read_ratings(ss), r);

  auto error_of = [](const std::string& text) {
    std::stringstream in(text);
    try {
      read_ratings(in, "r.tsv");
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(error_of("N=2 M=2\n0\t0\t1\n0\t0\t2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of("N=2 M=2\n0\t5\t1\n").find("r.tsv:2"), std::string::npos);
  EXPECT_NE(error_of("0\t0\t1\n").find("r.tsv:1"), std::string::npos);
}

}  // namespace
}  // namespace modelpar::mf
