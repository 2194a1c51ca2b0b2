// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "modelpar/engine.hpp"
#include "modelpar/lasso/design_matrix.hpp"
#include "modelpar/lasso/scheduling.hpp"

namespace modelpar::lasso {

enum class SchedulerMode { kPriority, kRandom };

inline SchedulerMode parse_scheduler_mode(const std::string& s) {
  if (s == "priority") return SchedulerMode::kPriority;
  if (s == "random") return SchedulerMode::kRandom;
  throw ConfigError("lasso: scheduler must be 'priority' or 'random', got '" + s + "'");
}

inline const char* to_string(SchedulerMode m) { return m == SchedulerMode::kPriority ? "priority" : "random"; }

struct LassoParams {
  double lambda = 0.1;
  double eta = 1e-6;
  std::size_t batch = 1;       // U: coordinates updated per round
  std::size_t candidates = 0;  // U′; 0 means 4·U (capped at J)
  double rho = 0.1;
  SchedulerMode mode = SchedulerMode::kPriority;

  std::size_t candidate_count(std::size_t features) const {
    return std::min(features, candidates ? candidates : 4 * batch);
  }

  void validate() const {
    if (!(lambda > 0.0)) throw ConfigError("lasso: lambda must be > 0");
    if (!(eta > 0.0)) throw ConfigError("lasso: eta must be > 0");
    if (batch < 1) throw ConfigError("lasso: batch must be >= 1");
    if (candidates != 0 && candidates < batch) throw ConfigError("lasso: candidates must be >= batch");
    if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("lasso: rho must be in (0, 1]");
  }
};

/// Per-coordinate model variable: value, magnitude of its last change, and
/// how many times it has been updated.
struct Coefficient {
  double beta = 0.0;
  double last_delta = 0.0;
  std::uint64_t updates = 0;

  friend bool operator==(const Coefficient&, const Coefficient&) = default;
};

/// Lasso by model-parallel coordinate descent. Rows of X are split over the
/// workers; each round the coordinator draws U′ candidates by priority,
/// keeps a ρ-safe subset of at most U, workers return partial sums
/// z_{j,p} = (x_j^p)ᵀ r^p + β_j ‖x_j^p‖², and pull sets β_j = S(Σ_p z_{j,p}, λ).
///
/// Store table: "beta" (J coefficients).
class LassoApp {
 public:
  using value_type = Coefficient;
  using payload_type = NoPayload;
  using entry_type = KeyedPartial<double>;
  using extra_type = NoExtra;
  using Store = VariableStore<value_type>;

  /// X is expected to have unit-norm columns.
  LassoApp(const DesignMatrix& x, std::span<const double> y, LassoParams params)
      : x_(&x), y_(y.begin(), y.end()), params_(params) {
    params_.validate();
    x.validate();
    if (y_.size() != x.rows)
      throw DataError("lasso: y has " + std::to_string(y_.size()) + " entries, X has " + std::to_string(x.rows) +
                      " rows");
  }

  const LassoParams& params() const noexcept { return params_; }
  const std::vector<IndexRange>& row_partition() const noexcept { return row_parts_; }

  Store initialize(const EngineConfig& config) {
    row_parts_ = partition_uniform(x_->rows, config.workers);
    workers_.assign(config.workers, {});
    for (std::size_t p = 0; p < config.workers; ++p) {
      auto& wd = workers_[p];
      const IndexRange rows = row_parts_[p];
      wd.first_row = rows.begin;
      wd.columns.resize(x_->cols());
      wd.squared_norms.assign(x_->cols(), 0.0);
      for (std::size_t j = 0; j < x_->cols(); ++j) {
        const auto& c = x_->columns[j];
        auto& local = wd.columns[j];
        for (std::size_t t = 0; t < c.nnz(); ++t)
          if (rows.contains(c.rows[t])) {
            local.rows.push_back(static_cast<std::uint32_t>(c.rows[t] - rows.begin));
            local.values.push_back(c.values[t]);
          }
        wd.squared_norms[j] = local.squared_norm();
      }
      wd.y.assign(y_.begin() + static_cast<std::ptrdiff_t>(rows.begin),
                  y_.begin() + static_cast<std::ptrdiff_t>(rows.end));
      wd.residual = wd.y;  // β starts at 0
    }
    Store store(config.workers);
    beta_base_ = store.add_table("beta", std::vector<Coefficient>(x_->cols()));
    return store;
  }

  /// x_jᵀ x_k assembled from every worker's partition.
  double partitioned_dot(std::size_t j, std::size_t k) const {
    double s = 0.0;
    for (const auto& wd : workers_) s += sparse_dot(wd.columns[j], wd.columns[k]);
    return s;
  }

  BatchOf<LassoApp> schedule(const RoundContext& ctx, const Store& store) const {
    const std::size_t features = x_->cols();
    Rng rng = coordinator_stream(ctx.seed, ctx.round);
    BatchOf<LassoApp> batch;
    batch.assignments.resize(ctx.workers);
    std::vector<std::size_t> chosen;
    if (params_.mode == SchedulerMode::kRandom) {
      const std::vector<double> uniform(features, 1.0);
      chosen = draw_candidates(uniform, std::min(features, params_.batch), rng);
    } else {
      std::vector<double> last_delta(features);
      for (std::size_t j = 0; j < features; ++j) last_delta[j] = store.get(beta_base_ + j).last_delta;
      const auto c = priority_weights(last_delta, params_.eta);
      const auto candidates = draw_candidates(c, params_.candidate_count(features), rng);
      chosen = dependency_filter(candidates, c, params_.rho, params_.batch,
                                 [this](std::size_t j, std::size_t k) { return partitioned_dot(j, k); });
    }
    for (std::size_t j : chosen) batch.dispatched.push_back(beta_base_ + j);
    return batch;
  }

  UpdateOf<LassoApp> push(WorkerContext& ctx, const BatchOf<LassoApp>& batch,
                          const StoreView<value_type>& view) const {
    const auto& wd = workers_[ctx.worker];
    UpdateOf<LassoApp> update;
    update.entries.reserve(batch.dispatched.size());
    for (VariableId id : batch.dispatched) {
      const std::size_t j = id - beta_base_;
      update.entries.push_back({id, partial_sum(wd, j, view.get(id).beta)});
    }
    return update;
  }

  void pull(const RoundContext&, const BatchOf<LassoApp>& batch, std::span<const UpdateOf<LassoApp>> updates,
            const Store& store, WriteSet<value_type>& writes, MetricMap& metrics) {
    std::unordered_map<VariableId, double> total;
    for (VariableId id : batch.dispatched) total[id] = 0.0;
    for (const auto& u : updates)  // worker order
      for (const auto& e : u.entries) total.at(e.id) += e.value;
    for (VariableId id : batch.dispatched) {
      Coefficient c = store.get(id);
      const double next = soft_threshold(total.at(id), params_.lambda);
      c.last_delta = std::abs(next - c.beta);
      c.beta = next;
      ++c.updates;
      writes.put(id, c);
    }
    std::size_t nnz = 0;
    for (std::size_t j = 0; j < x_->cols(); ++j) {
      const Coefficient* staged = writes.find(beta_base_ + j);
      if ((staged ? staged->beta : store.get(beta_base_ + j).beta) != 0.0) ++nnz;
    }
    metrics["nnz_beta"] = static_cast<double>(nnz);
    metrics["batch_size"] = static_cast<double>(batch.dispatched.size());
  }

  /// r^p ← r^p − x_j^p (β_new − β_old) for each committed coordinate.
  void on_sync(WorkerId p, std::span<const Change<value_type>> changes, const Store&) {
    auto& wd = workers_[p];
    for (const auto& ch : changes) {
      const double d = ch.after.beta - ch.before.beta;
      if (d == 0.0) continue;
      const auto& col = wd.columns[ch.id - beta_base_];
      for (std::size_t t = 0; t < col.nnz(); ++t) wd.residual[col.rows[t]] -= col.values[t] * d;
    }
  }

  /// ½ Σ_p ‖r^p‖² + λ‖β‖₁ from the worker residual caches.
  double objective(const Store& store) const {
    double loss = 0.0;
    for (const auto& wd : workers_)
      for (double r : wd.residual) loss += r * r;
    double l1 = 0.0;
    for (std::size_t j = 0; j < x_->cols(); ++j) l1 += std::abs(store.get(beta_base_ + j).beta);
    return 0.5 * loss + params_.lambda * l1;
  }

  std::vector<double> beta(const Store& store) const {
    std::vector<double> b(x_->cols());
    for (std::size_t j = 0; j < b.size(); ++j) b[j] = store.get(beta_base_ + j).beta;
    return b;
  }

  /// Largest |r^p − (y^p − X^p β)| over all workers.
  double residual_drift(const Store& store) const {
    const auto b = beta(store);
    double worst = 0.0;
    for (const auto& wd : workers_) {
      std::vector<double> fresh = wd.y;
      for (std::size_t j = 0; j < b.size(); ++j) {
        if (b[j] == 0.0) continue;
        const auto& col = wd.columns[j];
        for (std::size_t t = 0; t < col.nnz(); ++t) fresh[col.rows[t]] -= col.values[t] * b[j];
      }
      for (std::size_t i = 0; i < fresh.size(); ++i) worst = std::max(worst, std::abs(fresh[i] - wd.residual[i]));
    }
    return worst;
  }

  /// z_{j,p} for worker p against coefficient value `beta_j`.
  double partial_sum(WorkerId p, std::size_t j, double beta_j) const { return partial_sum(workers_.at(p), j, beta_j); }

 private:
  struct WorkerData {
    std::size_t first_row = 0;
    std::vector<SparseColumn> columns;  // rows relative to first_row
    std::vector<double> squared_norms;
    std::vector<double> y;
    std::vector<double> residual;
  };

  static double partial_sum(const WorkerData& wd, std::size_t j, double beta_j) {
    const auto& col = wd.columns[j];
    double s = 0.0;
    for (std::size_t t = 0; t < col.nnz(); ++t) s += col.values[t] * wd.residual[col.rows[t]];
    return s + beta_j * wd.squared_norms[j];
  }

  const DesignMatrix* x_;
  std::vector<double> y_;
  LassoParams params_;
  std::vector<IndexRange> row_parts_;
  std::vector<WorkerData> workers_;
  VariableId beta_base_ = 0;
};

}  // namespace modelpar::lasso
