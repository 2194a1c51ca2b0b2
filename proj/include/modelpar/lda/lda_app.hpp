// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "modelpar/engine.hpp"
#include "modelpar/lda/corpus.hpp"
#include "modelpar/lda/topic_state.hpp"

namespace modelpar::lda {

struct RotationPayload {
  std::vector<std::size_t> subset_of_worker;
};

/// Collapsed-Gibbs LDA with word-rotation scheduling. Documents are split
/// evenly over workers; the vocabulary is split into one subset per worker
/// and the subsets rotate every round, so a worker samples only tokens whose
/// word is in its current subset. s is the only table read by all workers.
///
/// Store tables: "B" (V rows), "s" (1 row), "D" (N rows), "z" (N rows, one
/// topic per token), "C" (rotation counter).
class LdaApp {
 public:
  using value_type = CountRow;
  using payload_type = RotationPayload;
  using entry_type = TokenUpdate;
  using extra_type = CountRow;  // worker's copy of s at the end of push
  using Store = VariableStore<value_type>;

  LdaApp(const Corpus& corpus, LdaParams params) : corpus_(&corpus), params_(params) {
    params_.validate();
    corpus.validate();
  }

  const Corpus& corpus() const noexcept { return *corpus_; }
  const LdaParams& params() const noexcept { return params_; }
  const std::vector<IndexRange>& doc_partition() const noexcept { return doc_parts_; }
  const std::vector<IndexRange>& vocab_partition() const noexcept { return vocab_parts_; }
  /// All token moves applied by the most recent pull.
  const std::vector<TokenUpdate>& last_updates() const noexcept { return last_updates_; }

  Store initialize(const EngineConfig& config) {
    const std::size_t workers = config.workers;
    doc_parts_ = partition_uniform(corpus_->doc_count(), workers);
    vocab_parts_ = partition_uniform(corpus_->vocab_size, workers);
    Rng rng = init_stream(config.seed);
    TopicState st = TopicState::random_init(*corpus_, params_, rng);

    Store store(workers);
    b_base_ = store.add_table("B", std::move(st.word_topic));
    s_id_ = store.add_table("s", {std::move(st.topic_sums)});
    d_base_ = store.add_table("D", std::move(st.doc_topic));
    std::vector<CountRow> z_rows(st.z.begin(), st.z.end());
    z_base_ = store.add_table("z", std::move(z_rows));
    c_id_ = store.add_table("C", {CountRow{0}});
    return store;
  }

  BatchOf<LdaApp> schedule(const RoundContext& ctx, const Store& store) const {
    BatchOf<LdaApp> batch;
    const auto counter = static_cast<std::uint64_t>(store.get(c_id_).at(0));
    batch.payload.subset_of_worker = rotation_schedule(counter, ctx.workers);
    batch.assignments.resize(ctx.workers);
    for (std::size_t p = 0; p < ctx.workers; ++p) {
      auto& ids = batch.assignments[p];
      const IndexRange words = vocab_parts_[batch.payload.subset_of_worker[p]];
      for (std::size_t v = words.begin; v < words.end; ++v) ids.push_back(b_base_ + v);
      for (std::size_t i = doc_parts_[p].begin; i < doc_parts_[p].end; ++i) {
        ids.push_back(d_base_ + i);
        ids.push_back(z_base_ + i);
      }
    }
    return batch;
  }

  UpdateOf<LdaApp> push(WorkerContext& ctx, const BatchOf<LdaApp>& batch, const StoreView<value_type>& view) const {
    LocalTopicTables local;
    local.docs = doc_parts_[ctx.worker];
    local.words = vocab_parts_[batch.payload.subset_of_worker[ctx.worker]];
    local.topic_sums = view.get(s_id_);
    for (std::size_t v = local.words.begin; v < local.words.end; ++v)
      local.word_topic.push_back(view.get(b_base_ + v));
    for (std::size_t i = local.docs.begin; i < local.docs.end; ++i) {
      local.doc_topic.push_back(view.get(d_base_ + i));
      local.z.push_back(view.get(z_base_ + i));
    }
    UpdateOf<LdaApp> update;
    update.entries = resample_subset(*corpus_, local, params_, ctx.rng);
    update.extra = std::move(local.topic_sums);
    return update;
  }

  void pull(const RoundContext&, const BatchOf<LdaApp>& batch, std::span<const UpdateOf<LdaApp>> updates,
            const Store& store, WriteSet<value_type>& writes, MetricMap& metrics) {
    last_updates_.clear();
    for (const auto& u : updates) last_updates_.insert(last_updates_.end(), u.entries.begin(), u.entries.end());
    apply_token_updates(
        *corpus_, last_updates_, [&](std::size_t i) -> auto& { return writes.stage(z_base_ + i, store); },
        [&](std::size_t i) -> auto& { return writes.stage(d_base_ + i, store); },
        [&](std::size_t v) -> auto& { return writes.stage(b_base_ + v, store); },
        [&]() -> auto& { return writes.stage(s_id_, store); });

    std::vector<CountRow> copies;
    copies.reserve(updates.size());
    for (const auto& u : updates) copies.push_back(u.extra);
    const value_type* staged = writes.find(s_id_);
    const CountRow& synced = staged ? *staged : store.get(s_id_);
    metrics["s_error"] = s_error(copies, synced, corpus_->token_count());
    metrics["tokens_sampled"] = static_cast<double>(last_updates_.size());

    const Count counter = store.get(c_id_).at(0);
    writes.put(c_id_, CountRow{static_cast<Count>((counter + 1) % static_cast<Count>(batch.assignments.size()))});
  }

  double objective(const Store& store) const { return log_likelihood(state(store)); }

  /// Reassembles the full topic state from committed store contents.
  TopicState state(const Store& store) const {
    TopicState st;
    st.params = params_;
    st.vocab_size = corpus_->vocab_size;
    for (std::size_t v = 0; v < corpus_->vocab_size; ++v) st.word_topic.push_back(store.get(b_base_ + v));
    st.topic_sums = store.get(s_id_);
    for (std::size_t i = 0; i < corpus_->doc_count(); ++i) {
      st.doc_topic.push_back(store.get(d_base_ + i));
      st.z.push_back(store.get(z_base_ + i));
    }
    return st;
  }

 private:
  const Corpus* corpus_;
  LdaParams params_;
  std::vector<IndexRange> doc_parts_;
  std::vector<IndexRange> vocab_parts_;
  VariableId b_base_ = 0, s_id_ = 0, d_base_ = 0, z_base_ = 0, c_id_ = 0;
  std::vector<TokenUpdate> last_updates_;
};

}  // namespace modelpar::lda
