// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "modelpar/errors.hpp"
#include "modelpar/partition.hpp"

namespace modelpar {

/// Writes staged by pull. Nothing reaches the store until the engine commits
/// the whole set at sync.
template <typename Value>
class WriteSet {
 public:
  void put(VariableId id, Value value) { writes_.insert_or_assign(id, std::move(value)); }

  /// Staged value for `id`, seeded from the committed value on first touch.
  template <typename Store>
  Value& stage(VariableId id, const Store& store) {
    auto it = writes_.find(id);
    if (it == writes_.end()) it = writes_.emplace(id, store.get(id)).first;
    return it->second;
  }

  const Value* find(VariableId id) const {
    auto it = writes_.find(id);
    return it == writes_.end() ? nullptr : &it->second;
  }

  bool empty() const noexcept { return writes_.empty(); }
  std::size_t size() const noexcept { return writes_.size(); }
  auto begin() const { return writes_.begin(); }
  auto end() const { return writes_.end(); }

 private:
  std::map<VariableId, Value> writes_;
};

template <typename Value>
struct Change {
  VariableId id;
  Value before;
  Value after;
};

struct TableInfo {
  std::string name;
  VariableId base = 0;
  std::size_t size = 0;

  bool contains(VariableId id) const noexcept { return id >= base && id < base + size; }
};

/// Partitioned, versioned key-value store for model variables. Ids are grouped
/// into named tables; each table is split over the shards with
/// partition_uniform, so every id lives in exactly one shard. The coordinator
/// is the only writer (through commit); any number of threads may read.
template <typename Value>
class VariableStore {
 public:
  using value_type = Value;

  explicit VariableStore(std::size_t shard_count) : shards_(shard_count) {
    if (shard_count == 0) throw ConfigError("VariableStore: shard count must be >= 1");
  }

  VariableStore(const VariableStore& other)
      : shards_(other.shards_), tables_(other.tables_), version_(other.version_) {}
  VariableStore& operator=(const VariableStore& other) {
    if (this != &other) {
      std::unique_lock lock(mutex_);
      shards_ = other.shards_;
      tables_ = other.tables_;
      version_ = other.version_;
    }
    return *this;
  }

  /// Registers a table with its initial values; returns the id of element 0.
  VariableId add_table(std::string name, std::vector<Value> initial) {
    std::unique_lock lock(mutex_);
    if (version_ != 0) throw ContractViolation("VariableStore: tables must be added before the first commit");
    for (const auto& t : tables_)
      if (t.name == name) throw ConfigError("VariableStore: duplicate table '" + name + "'");
    const VariableId base = tables_.empty() ? 0 : tables_.back().base + tables_.back().size;
    const std::size_t n = initial.size();
    tables_.push_back({std::move(name), base, n});
    const auto ranges = partition_uniform(n, shards_.size());
    for (std::size_t p = 0; p < shards_.size(); ++p) {
      auto& shard = shards_[p];
      shard.bases.push_back(shard.entries.size());
      for (std::size_t i = ranges[p].begin; i < ranges[p].end; ++i)
        shard.entries.push_back({std::move(initial[i]), 0});
    }
    return base;
  }

  const TableInfo& table(std::string_view name) const {
    for (const auto& t : tables_)
      if (t.name == name) return t;
    throw ConfigError("VariableStore: unknown table '" + std::string(name) + "'");
  }

  const std::vector<TableInfo>& tables() const noexcept { return tables_; }
  std::size_t shard_count() const noexcept { return shards_.size(); }
  std::size_t size() const noexcept {
    return tables_.empty() ? 0 : tables_.back().base + tables_.back().size;
  }

  /// Number of completed commits.
  std::uint64_t version() const {
    std::shared_lock lock(mutex_);
    return version_;
  }

  bool contains(VariableId id) const noexcept { return id < size(); }

  std::size_t shard_of(VariableId id) const { return locate(id).first; }

  /// Committed value of `id`. The reference stays valid; its contents change
  /// only inside commit.
  const Value& get(VariableId id) const {
    std::shared_lock lock(mutex_);
    const auto [shard, local] = locate(id);
    return shards_[shard].entries[local].value;
  }

  /// Round in which `id` was last written (0 = initial value).
  std::uint64_t version_of(VariableId id) const {
    std::shared_lock lock(mutex_);
    const auto [shard, local] = locate(id);
    return shards_[shard].entries[local].version;
  }

  /// Copies of the committed values for `ids`.
  std::vector<Value> snapshot(std::span<const VariableId> ids) const {
    std::shared_lock lock(mutex_);
    std::vector<Value> out;
    out.reserve(ids.size());
    for (VariableId id : ids) {
      const auto [shard, local] = locate(id);
      out.push_back(shards_[shard].entries[local].value);
    }
    return out;
  }

  /// Applies every staged write and advances the version by one. If any id is
  /// unknown nothing is written.
  std::vector<Change<Value>> commit(const WriteSet<Value>& writes) {
    std::unique_lock lock(mutex_);
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    slots.reserve(writes.size());
    for (const auto& [id, value] : writes) slots.push_back(locate(id));
    std::vector<Change<Value>> changes;
    changes.reserve(writes.size());
    ++version_;
    std::size_t n = 0;
    for (const auto& [id, value] : writes) {
      auto& entry = shards_[slots[n].first].entries[slots[n].second];
      changes.push_back({id, entry.value, value});
      entry.value = value;
      entry.version = version_;
      ++n;
    }
    return changes;
  }

  /// Number of entries held by shard `p`.
  std::size_t shard_size(std::size_t p) const { return shards_.at(p).entries.size(); }

 private:
  struct Entry {
    Value value;
    std::uint64_t version;
  };
  struct Shard {
    std::vector<Entry> entries;
    std::vector<std::size_t> bases;  // first local slot of each table
  };

  std::pair<std::size_t, std::size_t> locate(VariableId id) const {
    auto it = std::upper_bound(tables_.begin(), tables_.end(), id,
                               [](VariableId v, const TableInfo& t) { return v < t.base; });
    if (it == tables_.begin()) throw UnknownVariable(id);
    --it;
    if (!it->contains(id)) throw UnknownVariable(id);
    const std::size_t t = static_cast<std::size_t>(it - tables_.begin());
    const std::size_t offset = id - it->base;
    const std::size_t parts = shards_.size();
    const std::size_t shard = partition_owner(offset, it->size, parts);
    const std::size_t first = partition_uniform_begin(shard, it->size, parts);
    return {shard, shards_[shard].bases[t] + (offset - first)};
  }

  static std::size_t partition_uniform_begin(std::size_t p, std::size_t n, std::size_t parts) {
    const std::size_t base = n / parts;
    const std::size_t extra = n % parts;
    return p * base + std::min(p, extra);
  }

  std::vector<Shard> shards_;
  std::vector<TableInfo> tables_;
  std::uint64_t version_ = 0;
  mutable std::shared_mutex mutex_;
};

/// Read-only view handed to a push callback. Records which ids the worker
/// touched so per-worker residency can be reported.
template <typename Value>
class StoreView {
 public:
  explicit StoreView(const VariableStore<Value>& store) : store_(&store) {}

  const Value& get(VariableId id) const {
    touched_.insert(id);
    return store_->get(id);
  }
  std::vector<Value> snapshot(std::span<const VariableId> ids) const {
    touched_.insert(ids.begin(), ids.end());
    return store_->snapshot(ids);
  }
  const TableInfo& table(std::string_view name) const { return store_->table(name); }
  std::uint64_t version() const { return store_->version(); }

  const std::unordered_set<VariableId>& touched() const noexcept { return touched_; }

 private:
  const VariableStore<Value>* store_;
  mutable std::unordered_set<VariableId> touched_;
};

}  // namespace modelpar
