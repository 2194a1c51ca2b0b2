// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "modelpar/errors.hpp"
#include "modelpar/partition.hpp"
#include "modelpar/rng.hpp"
#include "modelpar/variable_store.hpp"
#include "modelpar/worker_pool.hpp"

namespace modelpar {

struct EngineConfig {
  std::size_t workers = 1;
  std::uint64_t max_rounds = 0;
  std::uint64_t seed = 0;
  std::chrono::milliseconds barrier_timeout{60'000};

  void validate() const {
    if (workers < 1) throw ConfigError("EngineConfig: workers must be >= 1");
    if (barrier_timeout.count() <= 0) throw ConfigError("EngineConfig: barrier_timeout must be positive");
  }
};

using MetricMap = std::map<std::string, double>;

struct RoundReport {
  std::uint64_t round = 0;
  double wall_time = 0.0;
  double objective = 0.0;
  MetricMap extra;
};

/// Variables chosen by schedule for one round. `dispatched` is broadcast to
/// every worker (each computes partials for all of them from its own data);
/// `assignments[p]` are variables worker p holds exclusively this round.
template <typename Payload>
struct ScheduleBatch {
  std::uint64_t round = 0;
  std::vector<VariableId> dispatched;
  std::vector<std::vector<VariableId>> assignments;
  Payload payload{};
};

struct NoPayload {};
struct NoExtra {};

template <typename T>
struct KeyedPartial {
  VariableId id;
  T value;
};

/// What a worker returns from push. `read_version` is the store version the
/// worker read from; the engine fills it in.
template <typename Entry, typename Extra = NoExtra>
struct PartialUpdate {
  WorkerId worker = 0;
  std::uint64_t read_version = 0;
  std::vector<Entry> entries;
  Extra extra{};
};

struct RoundContext {
  std::uint64_t round = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct WorkerContext {
  WorkerId worker = 0;
  std::uint64_t round = 0;
  std::size_t workers = 1;
  Rng rng;
};

template <typename A>
using BatchOf = ScheduleBatch<typename A::payload_type>;
template <typename A>
using UpdateOf = PartialUpdate<typename A::entry_type, typename A::extra_type>;
template <typename A>
using StoreOf = VariableStore<typename A::value_type>;

/// The schedule / push / pull triple plus initialization and the objective.
template <typename A>
concept Application = requires(A& app, const A& capp, const EngineConfig& config, const RoundContext& rc,
                               WorkerContext& wc, const StoreOf<A>& store,
                               const StoreView<typename A::value_type>& view, const BatchOf<A>& batch,
                               std::span<const UpdateOf<A>> updates,
                               WriteSet<typename A::value_type>& writes, MetricMap& metrics) {
  { app.initialize(config) } -> std::same_as<StoreOf<A>>;
  { app.schedule(rc, store) } -> std::same_as<BatchOf<A>>;
  { capp.push(wc, batch, view) } -> std::same_as<UpdateOf<A>>;
  app.pull(rc, batch, updates, store, writes, metrics);
  { capp.objective(store) } -> std::convertible_to<double>;
};

/// Worker-side refresh of derived caches from the committed changes.
template <typename A>
concept SyncsWorkerCaches =
    requires(A& app, WorkerId p, std::span<const Change<typename A::value_type>> changes, const StoreOf<A>& store) {
      app.on_sync(p, changes, store);
    };

template <typename Entry>
concept KeyedEntry = requires(const Entry& e) {
  { e.id } -> std::convertible_to<VariableId>;
};

/// Bulk-synchronous round driver. Each round: schedule on the coordinator,
/// push on every worker concurrently against the committed snapshot, pull on
/// the coordinator into a write set, then sync (atomic commit + barrier).
template <Application App>
class Engine {
 public:
  using Value = typename App::value_type;
  using Batch = BatchOf<App>;
  using Update = UpdateOf<App>;
  using Store = StoreOf<App>;

  Engine(App& app, EngineConfig config)
      : app_(&app), config_((config.validate(), config)), store_(app.initialize(config_)),
        residency_(config_.workers), pool_(config_.workers) {}

  const EngineConfig& config() const noexcept { return config_; }
  const Store& store() const noexcept { return store_; }
  std::uint64_t rounds_completed() const { return store_.version(); }

  RoundReport run_round() {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t round = store_.version();
    const RoundContext ctx{round, config_.seed, config_.workers};

    auto state = std::make_shared<RoundState>();
    state->batch = app_->schedule(ctx, store_);
    state->batch.round = round;
    validate_batch(state->batch);
    state->updates.resize(config_.workers);
    state->touched.resize(config_.workers);

    pool_.run(
        [this, state, round](WorkerId p) {
          StoreView<Value> view(store_);
          WorkerContext wctx{p, round, config_.workers, worker_stream(config_.seed, p, round)};
          const std::uint64_t read_version = view.version();
          Update update = std::as_const(*app_).push(wctx, state->batch, view);
          update.worker = p;
          update.read_version = read_version;
          state->updates[p] = std::move(update);
          state->touched[p] = view.touched();
        },
        config_.barrier_timeout, round);

    for (WorkerId p = 0; p < config_.workers; ++p) {
      if (state->updates[p].read_version != round)
        throw ContractViolation("worker " + std::to_string(p) + " read a stale snapshot");
      if constexpr (KeyedEntry<typename App::entry_type>) check_entries(state->batch, state->updates[p]);
    }

    WriteSet<Value> writes;
    RoundReport report;
    report.round = round;
    app_->pull(ctx, state->batch, std::span<const Update>(state->updates), std::as_const(store_), writes,
               report.extra);

    // sync
    auto changes = std::make_shared<const std::vector<Change<Value>>>(store_.commit(writes));
    if constexpr (SyncsWorkerCaches<App>) {
      pool_.run(
          [this, changes](WorkerId p) {
            app_->on_sync(p, std::span<const Change<Value>>(*changes), std::as_const(store_));
          },
          config_.barrier_timeout, round);
    }
    record_residency(state->touched);

    report.objective = app_->objective(store_);
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
  }

  /// Runs up to config().max_rounds rounds; stops early once `stop` is true.
  std::vector<RoundReport> run(const std::function<bool(const RoundReport&)>& stop = {},
                               const std::function<void(const RoundReport&)>& on_round = {}) {
    std::vector<RoundReport> reports;
    for (std::uint64_t r = 0; r < config_.max_rounds; ++r) {
      reports.push_back(run_round());
      if (on_round) on_round(reports.back());
      if (stop && stop(reports.back())) break;
    }
    return reports;
  }

  /// Largest number of distinct variables of each table worker p read in any
  /// single push so far.
  const std::map<std::string, std::size_t>& max_resident(WorkerId p) const { return residency_.at(p); }

 private:
  struct RoundState {
    Batch batch;
    std::vector<Update> updates;
    std::vector<std::unordered_set<VariableId>> touched;
  };

  void validate_batch(Batch& batch) const {
    if (batch.assignments.empty()) batch.assignments.resize(config_.workers);
    if (batch.assignments.size() != config_.workers)
      throw ContractViolation("schedule returned assignments for " + std::to_string(batch.assignments.size()) +
                              " workers, expected " + std::to_string(config_.workers));
    std::unordered_set<VariableId> seen;
    for (VariableId id : batch.dispatched) {
      if (!store_.contains(id)) throw UnknownVariable(id);
      if (!seen.insert(id).second)
        throw ContractViolation("variable " + std::to_string(id) + " dispatched twice");
    }
    seen.clear();
    for (const auto& ids : batch.assignments)
      for (VariableId id : ids) {
        if (!store_.contains(id)) throw UnknownVariable(id);
        if (!seen.insert(id).second)
          throw ContractViolation("variable " + std::to_string(id) + " assigned to two workers");
      }
  }

  static void check_entries(const Batch& batch, const Update& update) {
    std::unordered_set<VariableId> allowed(batch.dispatched.begin(), batch.dispatched.end());
    const auto& own = batch.assignments[update.worker];
    allowed.insert(own.begin(), own.end());
    for (const auto& e : update.entries)
      if (!allowed.contains(e.id))
        throw ContractViolation("worker " + std::to_string(update.worker) + " pushed a partial for variable " +
                                std::to_string(e.id) + " outside its batch");
  }

  void record_residency(const std::vector<std::unordered_set<VariableId>>& touched) {
    const auto& tables = store_.tables();
    for (WorkerId p = 0; p < touched.size(); ++p) {
      std::vector<std::size_t> counts(tables.size(), 0);
      for (VariableId id : touched[p])
        for (std::size_t t = 0; t < tables.size(); ++t)
          if (tables[t].contains(id)) {
            ++counts[t];
            break;
          }
      auto& slot = residency_[p];
      for (std::size_t t = 0; t < tables.size(); ++t) {
        auto& m = slot[tables[t].name];
        m = std::max(m, counts[t]);
      }
    }
  }

  App* app_;
  EngineConfig config_;
  Store store_;
  std::vector<std::map<std::string, std::size_t>> residency_;
  WorkerPool pool_;  // last: joins workers before the store goes away
};

}  // namespace modelpar
