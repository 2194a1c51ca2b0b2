// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "modelpar/errors.hpp"
#include "modelpar/lda/corpus.hpp"
#include "modelpar/partition.hpp"
#include "modelpar/rng.hpp"

namespace modelpar::lda {

using Count = std::int32_t;
using CountRow = std::vector<Count>;
using Topic = std::int32_t;

struct LdaParams {
  std::size_t topics = 10;
  double alpha = 0.1;
  double gamma = 0.01;

  void validate() const {
    if (topics < 1) throw ConfigError("lda: topics must be >= 1");
    if (!(alpha > 0.0)) throw ConfigError("lda: alpha must be > 0");
    if (!(gamma > 0.0)) throw ConfigError("lda: gamma must be > 0");
  }
};

/// Topic assignments and the count tables derived from them.
struct TopicState {
  LdaParams params;
  std::size_t vocab_size = 0;
  std::vector<std::vector<Topic>> z;  // per doc, per token
  std::vector<CountRow> doc_topic;    // D: N x K
  std::vector<CountRow> word_topic;   // B: V x K
  CountRow topic_sums;                // s: column sums of B

  /// Builds D, B, s from scratch.
  static TopicState from_assignments(const Corpus& corpus, std::vector<std::vector<Topic>> z,
                                     const LdaParams& params) {
    const std::size_t k_count = params.topics;
    TopicState st;
    st.params = params;
    st.vocab_size = corpus.vocab_size;
    st.doc_topic.assign(corpus.doc_count(), CountRow(k_count, 0));
    st.word_topic.assign(corpus.vocab_size, CountRow(k_count, 0));
    st.topic_sums.assign(k_count, 0);
    if (z.size() != corpus.doc_count()) throw DataError("topic state: assignment count does not match docs");
    for (std::size_t i = 0; i < corpus.doc_count(); ++i) {
      if (z[i].size() != corpus.docs[i].size()) throw DataError("topic state: assignment length mismatch");
      for (std::size_t j = 0; j < z[i].size(); ++j) {
        const Topic k = z[i][j];
        if (k < 0 || static_cast<std::size_t>(k) >= k_count) throw DataError("topic state: topic out of range");
        ++st.doc_topic[i][k];
        ++st.word_topic[corpus.docs[i][j]][k];
        ++st.topic_sums[k];
      }
    }
    st.z = std::move(z);
    return st;
  }

  /// Uniform random initial assignment from `rng`, docs then positions in order.
  static TopicState random_init(const Corpus& corpus, const LdaParams& params, Rng& rng) {
    std::vector<std::vector<Topic>> z(corpus.doc_count());
    for (std::size_t i = 0; i < corpus.doc_count(); ++i) {
      z[i].resize(corpus.docs[i].size());
      for (auto& k : z[i]) k = static_cast<Topic>(uniform_index(rng, params.topics));
    }
    return from_assignments(corpus, std::move(z), params);
  }

  friend bool operator==(const TopicState& a, const TopicState& b) {
    return a.z == b.z && a.doc_topic == b.doc_topic && a.word_topic == b.word_topic && a.topic_sums == b.topic_sums;
  }
};

/// Collapsed conditional over topics for one token whose own assignment has
/// already been removed from the counts:
///   p(k) ∝ (γ + B[v,k]) / (Vγ + s[k]) · (α + D[i,k]) / (Kα + Σ_k D[i,k]).
inline void topic_conditional(std::span<const Count> word_row, std::span<const Count> doc_row,
                              std::span<const Count> topic_sums, std::size_t vocab_size, const LdaParams& params,
                              std::span<double> out) {
  const std::size_t k_count = params.topics;
  if (word_row.size() != k_count || doc_row.size() != k_count || topic_sums.size() != k_count ||
      out.size() != k_count)
    throw DataError("gibbs conditional: row length does not match topic count");
  double doc_total = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (word_row[k] < 0 || doc_row[k] < 0 || topic_sums[k] < 0)
      throw DataError("gibbs conditional: negative count after removing the current token");
    doc_total += doc_row[k];
  }
  const double v_gamma = static_cast<double>(vocab_size) * params.gamma;
  const double k_alpha = static_cast<double>(k_count) * params.alpha;
  double total = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    out[k] = (params.gamma + word_row[k]) / (v_gamma + topic_sums[k]) * (params.alpha + doc_row[k]) /
             (k_alpha + doc_total);
    total += out[k];
  }
  for (auto& p : out) p /= total;
}

/// Conditional for token (doc, pos) given every other assignment in `state`.
inline std::vector<double> gibbs_conditional(const Corpus& corpus, const TopicState& state, std::size_t doc,
                                             std::size_t pos) {
  const WordId v = corpus.docs.at(doc).at(pos);
  const Topic cur = state.z.at(doc).at(pos);
  CountRow word_row = state.word_topic.at(v);
  CountRow doc_row = state.doc_topic.at(doc);
  CountRow sums = state.topic_sums;
  --word_row[cur];
  --doc_row[cur];
  --sums[cur];
  std::vector<double> p(state.params.topics);
  topic_conditional(word_row, doc_row, sums, state.vocab_size, state.params, p);
  return p;
}

/// Inverse-CDF draw from a normalized distribution.
inline Topic sample_topic(std::span<const double> probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    acc += probs[k];
    last = k;
    if (u < acc) return static_cast<Topic>(k);
  }
  return static_cast<Topic>(last);
}

/// Collapsed joint log P(W, Z) with symmetric Dirichlet priors.
inline double log_likelihood(const TopicState& st) {
  const double k_count = static_cast<double>(st.params.topics);
  const double v_count = static_cast<double>(st.vocab_size);
  const double a = st.params.alpha;
  const double g = st.params.gamma;
  const double lg_a = std::lgamma(a);
  const double lg_g = std::lgamma(g);
  double ll = 0.0;
  for (std::size_t k = 0; k < st.params.topics; ++k) {
    if (st.topic_sums[k] == 0) continue;
    double term = std::lgamma(v_count * g) - std::lgamma(v_count * g + st.topic_sums[k]);
    for (const auto& row : st.word_topic)
      if (row[k] > 0) term += std::lgamma(g + row[k]) - lg_g;
    ll += term;
  }
  for (const auto& row : st.doc_topic) {
    double len = 0.0;
    double term = 0.0;
    for (Count c : row) {
      len += c;
      if (c > 0) term += std::lgamma(a + c) - lg_a;
    }
    if (len > 0.0) ll += term + std::lgamma(k_count * a) - std::lgamma(k_count * a + len);
  }
  return ll;
}

/// Mean L1 gap between each worker's end-of-push copy of s and the synced s,
/// normalized by P·M. Lies in [0, 2].
inline double s_error(std::span<const CountRow> local_copies, std::span<const Count> synced, std::size_t tokens) {
  double total = 0.0;
  for (const auto& copy : local_copies) {
    if (copy.size() != synced.size()) throw DataError("s_error: topic-sum length mismatch");
    for (std::size_t k = 0; k < copy.size(); ++k) total += std::abs(static_cast<double>(copy[k]) - synced[k]);
  }
  if (local_copies.empty() || tokens == 0) return 0.0;
  return total / (static_cast<double>(local_copies.size()) * static_cast<double>(tokens));
}

/// Vocabulary subset index (0-based) for each worker in round `counter`:
/// worker a gets subset (a + counter) mod U.
inline std::vector<std::size_t> rotation_schedule(std::uint64_t counter, std::size_t subsets) {
  if (subsets == 0) throw ConfigError("rotation_schedule: subset count must be >= 1");
  std::vector<std::size_t> out(subsets);
  for (std::size_t a = 0; a < subsets; ++a) out[a] = static_cast<std::size_t>((a + counter) % subsets);
  return out;
}

struct TokenUpdate {
  std::uint32_t doc;
  std::uint32_t pos;
  Topic topic;

  friend bool operator==(const TokenUpdate&, const TokenUpdate&) = default;
};

/// Worker-local tables for one push: the owned documents' D and z rows, the B
/// rows of the assigned word subset, and a private copy of s.
struct LocalTopicTables {
  IndexRange docs;
  IndexRange words;
  std::vector<CountRow> doc_topic;      // indexed by doc - docs.begin
  std::vector<std::vector<Topic>> z;    // indexed by doc - docs.begin
  std::vector<CountRow> word_topic;     // indexed by word - words.begin
  CountRow topic_sums;
};

/// Resamples every owned token whose word falls in `tables.words`, in
/// ascending (doc, position) order, updating the local tables as it goes.
inline std::vector<TokenUpdate> resample_subset(const Corpus& corpus, LocalTopicTables& tables,
                                                const LdaParams& params, Rng& rng) {
  if (tables.words.end > corpus.vocab_size)
    throw DataError("gibbs push: word subset [" + std::to_string(tables.words.begin) + ", " +
                    std::to_string(tables.words.end) + ") exceeds vocabulary size " +
                    std::to_string(corpus.vocab_size));
  std::vector<TokenUpdate> out;
  std::vector<double> probs(params.topics);
  for (std::size_t i = tables.docs.begin; i < tables.docs.end; ++i) {
    const auto& doc = corpus.docs[i];
    auto& d_row = tables.doc_topic[i - tables.docs.begin];
    auto& z_row = tables.z[i - tables.docs.begin];
    for (std::size_t j = 0; j < doc.size(); ++j) {
      const WordId v = doc[j];
      if (!tables.words.contains(v)) continue;
      auto& b_row = tables.word_topic[v - tables.words.begin];
      const Topic old = z_row[j];
      --d_row[old];
      --b_row[old];
      --tables.topic_sums[old];
      topic_conditional(b_row, d_row, tables.topic_sums, corpus.vocab_size, params, probs);
      const Topic k = sample_topic(probs, rng);
      ++d_row[k];
      ++b_row[k];
      ++tables.topic_sums[k];
      z_row[j] = k;
      out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), k});
    }
  }
  return out;
}

/// Applies token moves to count tables through accessors so the same
/// bookkeeping serves a TopicState and a staged write set.
template <typename ZRow, typename DRow, typename BRow, typename SRow>
void apply_token_updates(const Corpus& corpus, std::span<const TokenUpdate> updates, ZRow&& z_row, DRow&& d_row,
                         BRow&& b_row, SRow&& sums) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(updates.size());
  for (const auto& u : updates)
    if (!seen.insert((static_cast<std::uint64_t>(u.doc) << 32) | u.pos).second)
      throw ContractViolation("stats pull: token (" + std::to_string(u.doc) + "," + std::to_string(u.pos) +
                              ") updated by more than one worker");
  auto& s = sums();
  for (const auto& u : updates) {
    const WordId v = corpus.docs.at(u.doc).at(u.pos);
    auto& z = z_row(u.doc);
    const Topic old = z.at(u.pos);
    if (old == u.topic) continue;
    auto& d = d_row(u.doc);
    auto& b = b_row(v);
    --d[old];
    --b[old];
    --s[old];
    ++d[u.topic];
    ++b[u.topic];
    ++s[u.topic];
    z[u.pos] = u.topic;
  }
}

/// stats pull against a standalone TopicState.
inline void apply_token_updates(const Corpus& corpus, std::span<const TokenUpdate> updates, TopicState& st) {
  apply_token_updates(
      corpus, updates, [&](std::size_t i) -> auto& { return st.z[i]; },
      [&](std::size_t i) -> auto& { return st.doc_topic[i]; },
      [&](std::size_t v) -> auto& { return st.word_topic[v]; }, [&]() -> auto& { return st.topic_sums; });
}

}  // namespace modelpar::lda
