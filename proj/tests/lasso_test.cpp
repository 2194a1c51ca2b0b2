// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "modelpar/engine.hpp"
#include "modelpar/lasso/lasso_app.hpp"

namespace modelpar::lasso {
namespace {

TEST(SoftThreshold, Examples) {
  EXPECT_DOUBLE_EQ(soft_threshold(0.5, 0.2), 0.3);
  EXPECT_EQ(soft_threshold(0.1, 0.2), 0.0);
  EXPECT_DOUBLE_EQ(soft_threshold(-0.5, 0.2), -0.3);
  EXPECT_EQ(soft_threshold(0.2, 0.2), 0.0);
}

TEST(SoftThreshold, RandomProperties) {
  Rng rng(77);
  for (int t = 0; t < 10000; ++t) {
    const double v = 10.0 * (uniform01(rng) - 0.5);
    const double lam = 3.0 * uniform01(rng);
    const double s = soft_threshold(v, lam);
    if (std::abs(v) <= lam) {
      EXPECT_EQ(s, 0.0);
    } else {
      EXPECT_EQ(std::signbit(s), std::signbit(v));
      EXPECT_NEAR(std::abs(v) - std::abs(s), lam, 1e-12);
    }
    EXPECT_LE(std::abs(s), std::abs(v));
    EXPECT_EQ(soft_threshold(-v, lam), -s);
  }
}

TEST(PriorityWeights, Examples) {
  const std::vector<double> fresh(8, 0.0);
  for (double c : priority_weights(fresh, 1e-6)) EXPECT_DOUBLE_EQ(c, 1.0 / 8);
  const std::vector<double> d{0.3, 0.1};
  const auto c = priority_weights(d, 0.1);
  EXPECT_NEAR(c[0], 2.0 / 3, 1e-15);
  EXPECT_NEAR(c[1], 1.0 / 3, 1e-15);
  EXPECT_THROW(priority_weights(d, 0.0), ConfigError);
}

TEST(PriorityWeights, DistributionAndArgmax) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> d(1000);
    for (auto& x : d) x = uniform01(rng) * uniform01(rng);
    const auto c = priority_weights(d, 1e-6);
    double sum = 0;
    for (double x : c) {
      EXPECT_GT(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(std::max_element(c.begin(), c.end()) - c.begin(), std::max_element(d.begin(), d.end()) - d.begin());
  }
}

TEST(DrawCandidates, AllWhenCountEqualsSize) {
  const std::vector<double> w{0.1, 0.2, 0.7};
  Rng rng(1);
  auto all = draw_candidates(w, 3, rng);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_THROW(draw_candidates(w, 4, rng), ConfigError);
}

TEST(DrawCandidates, DistinctAndDeterministic) {
  const std::vector<double> w(50, 0.02);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(seed), b(seed);
    const auto x = draw_candidates(w, 10, a);
    EXPECT_EQ(x, draw_candidates(w, 10, b));
    EXPECT_EQ(std::set<std::size_t>(x.begin(), x.end()).size(), 10u);
  }
  Rng a(3), b(3);
  EXPECT_EQ(draw_candidates(w, 1, a), draw_candidates(w, 1, b));
}

TEST(DrawCandidates, PointMassDominates) {
  const double eps = 0.01;
  std::vector<double> w(100, eps / 99);
  w[42] = 1 - eps;
  int hits = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    Rng rng(s);
    const auto c = draw_candidates(w, 1, rng);
    hits += c[0] == 42;
  }
  EXPECT_GE(hits, static_cast<int>((1 - eps) * 1000) - 10);  // 1σ ≈ 3, so this is >3σ slack
}

auto dot_table(const std::vector<std::vector<double>>& m) {
  return [&m](std::size_t j, std::size_t k) { return m[j][k]; };
}

TEST(DependencyFilter, OrthogonalAcceptsFirstU) {
  std::vector<std::vector<double>> m(6, std::vector<double>(6, 0.0));
  const std::vector<std::size_t> cand{0, 1, 2, 3, 4, 5};
  const std::vector<double> pri{0.3, 0.25, 0.2, 0.12, 0.08, 0.05};
  EXPECT_EQ(dependency_filter(cand, pri, 0.1, 4, dot_table(m)), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(DependencyFilter, IdenticalColumnsKeepHigherPriority) {
  std::vector<std::vector<double>> m{{1, 1}, {1, 1}};
  const std::vector<std::size_t> cand{0, 1};
  const std::vector<double> pri{0.2, 0.8};
  EXPECT_EQ(dependency_filter(cand, pri, 0.1, 2, dot_table(m)), (std::vector<std::size_t>{1}));
}

TEST(DependencyFilter, HandTracedFiveColumns) {
  // Priority order: 0, 2, 1, 4, 3. ρ = 0.3.
  //   0: accepted (first).
  //   2: |x2·x0| = 0.35 → rejected.
  //   1: |x1·x0| = 0.10 → accepted.
  //   4: |x4·x0| = 0.20, |x4·x1| = 0.29 → accepted.
  //   3: |x3·x0| = 0.05, |x3·x1| = -0.31 → rejected.
  std::vector<std::vector<double>> m(5, std::vector<double>(5, 0.0));
  auto set = [&](int a, int b, double v) { m[a][b] = m[b][a] = v; };
  set(0, 2, 0.35);
  set(0, 1, 0.10);
  set(0, 4, 0.20);
  set(1, 4, 0.29);
  set(0, 3, 0.05);
  set(1, 3, -0.31);
  set(2, 4, 0.9);  // irrelevant once 2 is out
  const std::vector<std::size_t> cand{3, 1, 4, 0, 2};
  const std::vector<double> pri{0.4, 0.15, 0.25, 0.08, 0.12};
  EXPECT_EQ(dependency_filter(cand, pri, 0.3, 5, dot_table(m)), (std::vector<std::size_t>{0, 1, 4}));
  EXPECT_EQ(dependency_filter(cand, pri, 0.3, 2, dot_table(m)), (std::vector<std::size_t>{0, 1}));
}

TEST(DependencyFilter, RandomSetsArePairwiseSafe) {
  const auto data = gen_synthetic(60, 200, 9);
  Rng rng(9);
  const std::vector<double> pri(200, 1.0 / 200);
  for (int t = 0; t < 1000; ++t) {
    const double rho = 0.02 + 0.5 * uniform01(rng);
    const auto cand = draw_candidates(pri, 2 + uniform_index(rng, 30), rng);
    auto dot = [&](std::size_t j, std::size_t k) { return sparse_dot(data.x.columns[j], data.x.columns[k]); };
    const auto ok = dependency_filter(cand, pri, rho, 8, dot);
    ASSERT_FALSE(ok.empty());
    EXPECT_LE(ok.size(), 8u);
    for (std::size_t a = 0; a < ok.size(); ++a)
      for (std::size_t b = a + 1; b < ok.size(); ++b) EXPECT_LT(std::abs(dot(ok[a], ok[b])), rho);
  }
}

// Dense helpers written directly from the objective and update formulas.
struct Dense {
  std::size_t n, J;
  std::vector<std::vector<double>> x;  // x[j][i]
  std::vector<double> y;
};

Dense densify(const DesignMatrix& m, const std::vector<double>& y) {
  Dense d{m.rows, m.cols(), std::vector<std::vector<double>>(m.cols(), std::vector<double>(m.rows, 0.0)), y};
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t t = 0; t < m.columns[j].nnz(); ++t) d.x[j][m.columns[j].rows[t]] = m.columns[j].values[t];
  return d;
}

double dense_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Partial-sum form over all rows: x_jᵀ y − Σ_{k≠j} x_jᵀ x_k β_k.
double dense_z(const Dense& d, std::size_t j, const std::vector<double>& beta) {
  double z = dense_dot(d.x[j], d.y);
  for (std::size_t k = 0; k < d.J; ++k)
    if (k != j) z -= dense_dot(d.x[j], d.x[k]) * beta[k];
  return z;
}

double dense_objective(const Dense& d, const std::vector<double>& beta, double lambda) {
  double loss = 0;
  for (std::size_t i = 0; i < d.n; ++i) {
    double r = d.y[i];
    for (std::size_t j = 0; j < d.J; ++j) r -= d.x[j][i] * beta[j];
    loss += r * r;
  }
  double l1 = 0;
  for (double b : beta) l1 += std::abs(b);
  return 0.5 * loss + lambda * l1;
}

struct Instance {
  SyntheticLasso data;
  Dense dense;
  double lambda;
};

Instance small_instance(std::uint64_t seed) {
  auto data = gen_synthetic(20, 5, seed, {std::size_t{12}});
  data.true_beta = {1.0, -0.5, 0.0, 2.0, 0.0};
  data.y = data.x.multiply(data.true_beta);
  Rng rng(seed);
  for (auto& v : data.y) v += 0.1 * (uniform01(rng) - 0.5);
  Dense d = densify(data.x, data.y);
  const double lam = 0.1 * lambda_max(data.x, data.y);
  return {std::move(data), std::move(d), lam};
}

TEST(CdPush, PartialSumsMatchDenseFormula) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto inst = small_instance(seed);
    LassoParams p;
    p.lambda = inst.lambda;
    p.batch = 1;
    LassoApp app(inst.data.x, inst.data.y, p);
    Engine<LassoApp> engine(app, {3, 0, seed});
    for (int r = 0; r < 6; ++r) engine.run_round();
    const auto beta = app.beta(engine.store());
    for (std::size_t j = 0; j < 5; ++j) {
      double z = 0;
      for (std::size_t w = 0; w < 3; ++w) z += app.partial_sum(w, j, beta[j]);
      EXPECT_NEAR(z, dense_z(inst.dense, j, beta), 1e-12);
    }
  }
}

TEST(CdPush, ZeroBetaGivesXtY) {
  const auto inst = small_instance(2);
  LassoParams p;
  LassoApp app(inst.data.x, inst.data.y, p);
  Engine<LassoApp> engine(app, {2, 0, 1});
  for (std::size_t j = 0; j < 5; ++j) {
    const double z = app.partial_sum(0, j, 0.0) + app.partial_sum(1, j, 0.0);
    EXPECT_NEAR(z, dense_dot(inst.dense.x[j], inst.dense.y), 1e-12);
  }
}

TEST(CdPush, EmptyPartitionColumnGivesZero) {
  DesignMatrix x;
  x.rows = 4;
  x.columns = {{{0, 1}, {0.6, 0.8}}, {{2, 3}, {0.6, 0.8}}};
  const std::vector<double> y{1, 2, 3, 4};
  LassoApp app(x, y, {});
  Engine<LassoApp> engine(app, {2, 0, 1});
  EXPECT_EQ(app.partial_sum(1, 0, 5.0), 0.0);
  EXPECT_EQ(app.partial_sum(0, 1, -2.0), 0.0);
}

TEST(CdPull, SingleCoordinateMatchesSequentialStep) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto inst = small_instance(seed);
    LassoParams p;
    p.lambda = inst.lambda;
    p.batch = 1;
    LassoApp app(inst.data.x, inst.data.y, p);
    Engine<LassoApp> engine(app, {2, 0, seed});
    for (int r = 0; r < 40; ++r) {
      const auto before = app.beta(engine.store());
      std::vector<std::uint64_t> counts;
      for (std::size_t j = 0; j < 5; ++j) counts.push_back(engine.store().get(j).updates);
      engine.run_round();
      const auto after = app.beta(engine.store());
      int updated = 0;
      for (std::size_t j = 0; j < 5; ++j) {
        const auto& c = engine.store().get(j);
        if (c.updates == counts[j]) {
          EXPECT_EQ(after[j], before[j]);
          continue;
        }
        ++updated;
        // Coordinate update on unit-norm columns: β_j ← S(z_j, λ).
        const double want = soft_threshold(dense_z(inst.dense, j, before), inst.lambda);
        EXPECT_NEAR(after[j], want, 1e-12);
        EXPECT_NEAR(c.last_delta, std::abs(want - before[j]), 1e-12);
      }
      EXPECT_EQ(updated, 1);
      EXPECT_LE(app.residual_drift(engine.store()), 1e-12);
    }
  }
}

TEST(CdPull, UnivariateClosedForm) {
  DesignMatrix x;
  x.rows = 3;
  const std::vector<double> y{3, 0, 4};
  x.columns = {{{0, 2}, {0.6, 0.8}}};  // y / ‖y‖
  LassoParams p;
  p.lambda = 1.5;
  LassoApp app(x, y, p);
  Engine<LassoApp> engine(app, {1, 0, 0});
  engine.run_round();
  EXPECT_NEAR(app.beta(engine.store())[0], soft_threshold(5.0, 1.5), 1e-15);
  EXPECT_NEAR(app.objective(engine.store()), dense_objective(densify(x, y), {3.5}, 1.5), 1e-12);
}

TEST(LassoObjective, Examples) {
  const auto inst = small_instance(3);
  const std::vector<double> zero(5, 0.0);
  EXPECT_NEAR(lasso_objective(inst.data.x, inst.data.y, zero, 0.7), 0.5 * dense_dot(inst.data.y, inst.data.y),
              1e-12);
  const auto exact = inst.data.x.multiply(inst.data.true_beta);
  EXPECT_NEAR(lasso_objective(inst.data.x, exact, inst.data.true_beta, 0.0), 0.0, 1e-24);
  const std::vector<double> b{0.3, -0.2, 0.0, 1.1, 0.05};
  EXPECT_NEAR(lasso_objective(inst.data.x, inst.data.y, b, 0.4), dense_objective(inst.dense, b, 0.4), 1e-12);
}

std::vector<double> sequential_cd(const Dense& d, double lambda) {
  std::vector<double> b(d.J, 0.0);
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double change = 0;
    for (std::size_t j = 0; j < d.J; ++j) {
      const double next = soft_threshold(dense_z(d, j, b), lambda) / dense_dot(d.x[j], d.x[j]);
      change = std::max(change, std::abs(next - b[j]));
      b[j] = next;
    }
    if (change < 1e-15) break;
  }
  return b;
}

TEST(LassoApp, FixedPointIsStable) {
  const auto inst = small_instance(5);
  const auto opt = sequential_cd(inst.dense, inst.lambda);
  // Both schedulers with one coordinate per round; priority mode with U′ = U
  // samples from c directly, so every coordinate keeps being revisited.
  for (auto mode : {SchedulerMode::kRandom, SchedulerMode::kPriority}) {
    LassoParams p;
    p.lambda = inst.lambda;
    p.batch = 1;
    p.candidates = 1;
    p.eta = 1e-2;
    p.mode = mode;
    LassoApp app(inst.data.x, inst.data.y, p);
    Engine<LassoApp> engine(app, {2, 0, 5});
    for (int r = 0; r < 3000; ++r) engine.run_round();
    const auto at = app.beta(engine.store());
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(at[j], opt[j], 1e-10) << to_string(mode);
    for (int r = 0; r < 50; ++r) engine.run_round();
    const auto later = app.beta(engine.store());
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(later[j], at[j], 1e-10) << to_string(mode);
  }
}

TEST(LassoApp, RandomModeDispatchesUDistinct) {
  const auto data = gen_synthetic(50, 40, 2);
  LassoParams p;
  p.batch = 6;
  p.mode = SchedulerMode::kRandom;
  LassoApp app(data.x, data.y, p);
  Engine<LassoApp> engine(app, {2, 0, 2});
  for (int r = 0; r < 10; ++r) EXPECT_EQ(engine.run_round().extra.at("batch_size"), 6.0);
}

TEST(LassoApp, PriorityBatchesAreRhoSafe) {
  const auto data = gen_synthetic(100, 300, 4);
  LassoParams p;
  p.batch = 8;
  p.candidates = 32;
  p.rho = 0.1;
  p.lambda = 0.1 * lambda_max(data.x, data.y);
  LassoApp app(data.x, data.y, p);
  Engine<LassoApp> engine(app, {2, 0, 4});
  std::vector<std::uint64_t> counts(300, 0);
  double prev = app.objective(engine.store());
  for (int r = 0; r < 100; ++r) {
    const auto rep = engine.run_round();
    std::vector<std::size_t> batch;
    for (std::size_t j = 0; j < 300; ++j) {
      const auto u = engine.store().get(j).updates;
      if (u != counts[j]) batch.push_back(j);
      counts[j] = u;
    }
    EXPECT_EQ(static_cast<double>(batch.size()), rep.extra.at("batch_size"));
    for (std::size_t a = 0; a < batch.size(); ++a)
      for (std::size_t b = a + 1; b < batch.size(); ++b)
        EXPECT_LT(std::abs(sparse_dot(data.x.columns[batch[a]], data.x.columns[batch[b]])), 0.1);
    EXPECT_LE(rep.objective, prev + 1e-12);
    prev = rep.objective;
  }
}

TEST(GenSynthetic, DegenerateSize) {
  const auto s = gen_synthetic(25, 1, 3);
  ASSERT_EQ(s.x.cols(), 1u);
  EXPECT_EQ(s.x.columns[0].nnz(), 25u);
  EXPECT_NEAR(s.x.columns[0].squared_norm(), 1.0, 1e-12);
  EXPECT_EQ(s.y.size(), 25u);
  EXPECT_THROW(gen_synthetic(10, 3, 1, {std::size_t{11}}), ConfigError);
}

TEST(GenSynthetic, Deterministic) {
  const auto a = gen_synthetic(80, 120, 6), b = gen_synthetic(80, 120, 6);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.true_beta, b.true_beta);
  EXPECT_NE(a.x, gen_synthetic(80, 120, 7).x);
}

TEST(GenSynthetic, SignalAndCentering) {
  const auto s = gen_synthetic(100, 250, 8);
  std::size_t nz = 0;
  for (double b : s.true_beta) {
    EXPECT_TRUE(b == 0.0 || b == 1.0 || b == -1.0);
    nz += b != 0.0;
  }
  EXPECT_EQ(nz, 3u);  // ⌈0.01 · 250⌉
  double mean = 0;
  for (double v : s.y) mean += v;
  EXPECT_NEAR(mean / 100, 0.0, 1e-12);
}

TEST(GenSynthetic, AdjacentFeaturesMoreCorrelated) {
  double adjacent = 0, far = 0;
  int pairs = 0;
  Rng pick(1);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = gen_synthetic(200, 60, seed);
    for (std::size_t j = 1; j < 60; ++j) {
      if (s.x.columns[j].rows != s.x.columns[j - 1].rows) continue;  // not a chained pair
      std::size_t m;
      do m = uniform_index(pick, 60);
      while (m + 3 > j && m < j + 3);
      adjacent += std::abs(sparse_dot(s.x.columns[j - 1], s.x.columns[j]));
      far += std::abs(sparse_dot(s.x.columns[j - 1], s.x.columns[m]));
      ++pairs;
    }
  }
  ASSERT_GT(pairs, 100);
  EXPECT_GT(adjacent / pairs, far / pairs);
}

TEST(DesignIo, RoundTrip) {
  const auto s = gen_synthetic(30, 12, 2);
  std::stringstream xs, ys;
  write_design(xs, s.x);
  write_vector(ys, s.y);
  EXPECT_EQ(read_design(xs), s.x);
  EXPECT_EQ(read_vector(ys), s.y);
}

TEST(DesignIo, MalformedInputsAreDataErrors) {
  for (const std::string text : {"0: 0:1\n", "n=2 J=1\n0: 5:1\n", "n=2 J=1\n0: 0:abc\n", "n=2 J=2\n0: 0:1\n"}) {
    std::stringstream in(text);
    EXPECT_THROW(read_design(in, "x.txt"), DataError) << text;
  }
}

}  // namespace
}  // namespace modelpar::lasso
