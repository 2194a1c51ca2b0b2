// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "modelpar/engine.hpp"
#include "modelpar/mf/coordinate_update.hpp"
#include "modelpar/mf/ratings.hpp"

namespace modelpar::mf {

struct MfParams {
  std::size_t rank = 5;
  double lambda = 0.05;
  /// Row/column block count U for round-robin scheduling; 0 means one block
  /// per worker.
  std::size_t blocks = 0;

  void validate() const {
    if (rank < 1) throw ConfigError("mf: rank must be >= 1");
    if (!(lambda > 0.0)) throw ConfigError("mf: lambda must be > 0");
  }
};

struct RoundRobinPayload {
  bool rows = true;       // true: W rows, false: H columns
  std::size_t block = 0;  // 0-based index into the row or column blocks
};

/// Round-robin position → which factor block to dispatch. `counter` is in
/// [1, 2U]: counters 1..U select W row block counter-1, U+1..2U select H
/// column block counter-U-1.
inline RoundRobinPayload roundrobin_schedule(std::size_t counter, std::size_t blocks) {
  if (blocks == 0 || counter < 1 || counter > 2 * blocks)
    throw ConfigError("roundrobin_schedule: counter " + std::to_string(counter) + " outside [1, " +
                      std::to_string(2 * blocks) + "]");
  if (counter <= blocks) return {true, counter - 1};
  return {false, counter - blocks - 1};
}

/// Rank-K matrix factorization by coordinate descent. Each worker keeps the
/// entries of its row slice (used to update H) and of its column slice (used
/// to update W), with a cached residual per entry. Each round updates one
/// block of W rows or H columns; all workers contribute partial sums.
///
/// Store tables: "W" (N rows of length K), "H" (M columns of length K),
/// "counter" (round-robin position).
class MfApp {
 public:
  using value_type = std::vector<double>;
  using payload_type = RoundRobinPayload;
  using entry_type = KeyedPartial<BlockPartial>;
  using extra_type = NoExtra;
  using Store = VariableStore<value_type>;

  MfApp(const SparseRatings& ratings, MfParams params) : ratings_(&ratings), params_(params) {
    params_.validate();
    ratings.validate();
  }

  const MfParams& params() const noexcept { return params_; }
  std::size_t blocks() const noexcept { return blocks_; }
  const std::vector<IndexRange>& row_blocks() const noexcept { return row_blocks_; }
  const std::vector<IndexRange>& col_blocks() const noexcept { return col_blocks_; }
  const std::vector<IndexRange>& worker_rows() const noexcept { return worker_rows_; }
  const std::vector<IndexRange>& worker_cols() const noexcept { return worker_cols_; }

  Store initialize(const EngineConfig& config) {
    const std::size_t n = ratings_->rows, m = ratings_->cols, rank = params_.rank;
    const std::size_t workers = config.workers;
    blocks_ = params_.blocks ? params_.blocks : workers;
    row_blocks_ = partition_uniform(n, blocks_);
    col_blocks_ = partition_uniform(m, blocks_);
    worker_rows_ = partition_uniform(n, workers);
    worker_cols_ = partition_uniform(m, workers);

    Rng rng = init_stream(config.seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rank));
    std::vector<value_type> w(n, value_type(rank)), h(m, value_type(rank));
    for (auto& row : w)
      for (auto& x : row) x = scale * uniform01(rng);
    for (auto& col : h)
      for (auto& x : col) x = scale * uniform01(rng);

    workers_.assign(workers, {});
    for (std::size_t p = 0; p < workers; ++p) {
      auto& wd = workers_[p];
      wd.col_terms.assign(m, {});
      wd.row_terms.assign(n, {});
      wd.cells_of_row.assign(n, {});
      wd.cells_of_col.assign(m, {});
      for (const auto& e : ratings_->entries) {
        const bool in_rows = worker_rows_[p].contains(e.row);
        const bool in_cols = worker_cols_[p].contains(e.col);
        if (!in_rows && !in_cols) continue;
        const std::size_t c = wd.cells.size();
        double pred = 0.0;
        for (std::size_t k = 0; k < rank; ++k) pred += w[e.row][k] * h[e.col][k];
        wd.cells.push_back({e.row, e.col, e.value, e.value - pred});
        wd.cells_of_row[e.row].push_back(c);
        wd.cells_of_col[e.col].push_back(c);
        if (in_rows) wd.col_terms[e.col].push_back(c);
        if (in_cols) wd.row_terms[e.row].push_back(c);
      }
    }

    Store store(workers);
    w_base_ = store.add_table("W", std::move(w));
    h_base_ = store.add_table("H", std::move(h));
    counter_id_ = store.add_table("counter", {value_type{1.0}});
    return store;
  }

  VariableId w_id(std::size_t row) const noexcept { return w_base_ + row; }
  VariableId h_id(std::size_t col) const noexcept { return h_base_ + col; }

  BatchOf<MfApp> schedule(const RoundContext& ctx, const Store& store) const {
    BatchOf<MfApp> batch;
    const auto counter = static_cast<std::size_t>(store.get(counter_id_).at(0));
    batch.payload = roundrobin_schedule(counter, blocks_);
    const IndexRange block = batch.payload.rows ? row_blocks_[batch.payload.block] : col_blocks_[batch.payload.block];
    const VariableId base = batch.payload.rows ? w_base_ : h_base_;
    for (std::size_t x = block.begin; x < block.end; ++x) batch.dispatched.push_back(base + x);
    batch.assignments.resize(ctx.workers);
    return batch;
  }

  UpdateOf<MfApp> push(WorkerContext& ctx, const BatchOf<MfApp>& batch, const StoreView<value_type>& view) const {
    const auto& wd = workers_[ctx.worker];
    UpdateOf<MfApp> update;
    const bool rows = batch.payload.rows;
    for (VariableId id : batch.dispatched) {
      const std::size_t x = rows ? id - w_base_ : id - h_base_;
      // Updating row x of W uses this worker's column slice, and vice versa.
      const auto& terms = rows ? wd.row_terms[x] : wd.col_terms[x];
      if (terms.empty()) continue;
      BlockPartial stats(params_.rank);
      for (std::size_t c : terms) {
        const auto& cell = wd.cells[c];
        const auto& factor = rows ? view.get(h_id(cell.col)) : view.get(w_id(cell.row));
        stats.accumulate(factor, cell.residual);
      }
      update.entries.push_back({id, std::move(stats)});
    }
    return update;
  }

  void pull(const RoundContext&, const BatchOf<MfApp>& batch, std::span<const UpdateOf<MfApp>> updates,
            const Store& store, WriteSet<value_type>& writes, MetricMap&) {
    std::vector<std::optional<BlockPartial>> sums(batch.dispatched.size());
    std::unordered_map<VariableId, std::size_t> slot;
    for (std::size_t s = 0; s < batch.dispatched.size(); ++s) slot[batch.dispatched[s]] = s;
    for (const auto& u : updates)  // worker order
      for (const auto& e : u.entries) {
        auto& acc = sums[slot.at(e.id)];
        if (!acc) acc = e.value;
        else *acc += e.value;
      }
    for (std::size_t s = 0; s < batch.dispatched.size(); ++s) {
      const VariableId id = batch.dispatched[s];
      const BlockPartial stats = sums[s] ? *sums[s] : BlockPartial(params_.rank);
      writes.put(id, solve_block(store.get(id), stats, params_.lambda));
    }
    const auto counter = static_cast<std::size_t>(store.get(counter_id_).at(0));
    writes.put(counter_id_, value_type{static_cast<double>(counter % (2 * blocks_) + 1)});
  }

  /// Residual refresh for the committed rows/columns: r -= Δx · (other factor).
  void on_sync(WorkerId p, std::span<const Change<value_type>> changes, const Store& store) {
    auto& wd = workers_[p];
    for (const auto& ch : changes) {
      if (ch.id == counter_id_) continue;
      const bool is_row = ch.id < h_base_;
      const std::size_t x = is_row ? ch.id - w_base_ : ch.id - h_base_;
      for (std::size_t c : is_row ? wd.cells_of_row[x] : wd.cells_of_col[x]) {
        auto& cell = wd.cells[c];
        const auto& other = is_row ? store.get(h_id(cell.col)) : store.get(w_id(cell.row));
        double d = 0.0;
        for (std::size_t k = 0; k < params_.rank; ++k) d += (ch.after[k] - ch.before[k]) * other[k];
        cell.residual -= d;
      }
    }
  }

  double objective(const Store& store) const {
    return mf::objective(
        *ratings_, params_.rank, params_.lambda, [&](std::size_t i) -> const value_type& { return store.get(w_id(i)); },
        [&](std::size_t j) -> const value_type& { return store.get(h_id(j)); });
  }

  /// Largest |cached - recomputed| residual over every worker's entries.
  double residual_drift(const Store& store) const {
    double worst = 0.0;
    for (const auto& wd : workers_)
      for (const auto& cell : wd.cells) {
        const auto& w = store.get(w_id(cell.row));
        const auto& h = store.get(h_id(cell.col));
        double pred = 0.0;
        for (std::size_t k = 0; k < params_.rank; ++k) pred += w[k] * h[k];
        worst = std::max(worst, std::abs(cell.value - pred - cell.residual));
      }
    return worst;
  }

  /// Dense copies of the committed factors: W (N x K) and H (M x K).
  std::pair<std::vector<value_type>, std::vector<value_type>> factors(const Store& store) const {
    std::vector<value_type> w, h;
    for (std::size_t i = 0; i < ratings_->rows; ++i) w.push_back(store.get(w_id(i)));
    for (std::size_t j = 0; j < ratings_->cols; ++j) h.push_back(store.get(h_id(j)));
    return {std::move(w), std::move(h)};
  }

 private:
  struct Cell {
    std::uint32_t row;
    std::uint32_t col;
    double value;
    double residual;
  };
  struct WorkerData {
    std::vector<Cell> cells;
    std::vector<std::vector<std::size_t>> col_terms;     // row slice, grouped by column
    std::vector<std::vector<std::size_t>> row_terms;     // column slice, grouped by row
    std::vector<std::vector<std::size_t>> cells_of_row;  // every stored cell by row
    std::vector<std::vector<std::size_t>> cells_of_col;  // every stored cell by column
  };

  const SparseRatings* ratings_;
  MfParams params_;
  std::size_t blocks_ = 1;
  std::vector<IndexRange> row_blocks_, col_blocks_, worker_rows_, worker_cols_;
  std::vector<WorkerData> workers_;
  VariableId w_base_ = 0, h_base_ = 0, counter_id_ = 0;
};

}  // namespace modelpar::mf
