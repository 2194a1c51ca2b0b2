// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "modelpar/errors.hpp"
#include "modelpar/rng.hpp"

namespace modelpar::lda {

using WordId = std::uint32_t;

/// Bag-of-tokens corpus: docs[i][j] is the word id of token j in document i.
struct Corpus {
  std::size_t vocab_size = 0;
  std::vector<std::vector<WordId>> docs;

  std::size_t doc_count() const noexcept { return docs.size(); }
  std::size_t token_count() const noexcept {
    std::size_t m = 0;
    for (const auto& d : docs) m += d.size();
    return m;
  }

  void validate() const {
    for (std::size_t i = 0; i < docs.size(); ++i)
      for (std::size_t j = 0; j < docs[i].size(); ++j)
        if (docs[i][j] >= vocab_size)
          throw DataError("corpus: token (" + std::to_string(i) + "," + std::to_string(j) + ") has word id " +
                          std::to_string(docs[i][j]) + " >= V=" + std::to_string(vocab_size));
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

namespace detail {
inline bool parse_header_value(std::string_view line, std::string_view key, std::size_t& out) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  };
  line = trim(line);
  if (line.substr(0, key.size()) != key) return false;
  line.remove_prefix(key.size());
  line = trim(line);
  if (line.empty() || line.front() != '=') return false;
  line = trim(line.substr(1));
  auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), out);
  return ec == std::errc() && ptr == line.data() + line.size();
}
}  // namespace detail

/// Reads `V=<int>` then one document per line of whitespace-separated word ids.
/// An empty line is an empty document.
inline Corpus read_corpus(std::istream& in, const std::string& source = "<corpus>") {
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw DataError(source + ":1: missing header 'V=<int>'");
  ++lineno;
  if (!detail::parse_header_value(line, "V", corpus.vocab_size))
    throw DataError(source + ":1: malformed header, expected 'V=<int>'");
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<WordId> doc;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p == end) break;
      std::uint64_t w = 0;
      auto [next, ec] = std::from_chars(p, end, w);
      if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t'))
        throw DataError(source + ":" + std::to_string(lineno) + ": expected an integer word id");
      if (w >= corpus.vocab_size)
        throw DataError(source + ":" + std::to_string(lineno) + ": word id " + std::to_string(w) +
                        " out of range for V=" + std::to_string(corpus.vocab_size));
      doc.push_back(static_cast<WordId>(w));
      p = next;
    }
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open corpus file");
  return read_corpus(in, path);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  out << "V=" << corpus.vocab_size << '\n';
  for (const auto& doc : corpus.docs) {
    for (std::size_t j = 0; j < doc.size(); ++j) out << (j ? " " : "") << doc[j];
    out << '\n';
  }
}

/// Synthetic corpus drawn from the LDA generative process with `topics` sparse
/// topics (each concentrated on a random block of words). Used for testing
/// and demos.
inline Corpus generate_corpus(std::size_t docs, std::size_t vocab, std::size_t topics, std::size_t doc_length,
                              std::uint64_t seed) {
  if (vocab == 0 || topics == 0) throw ConfigError("generate_corpus: vocab and topics must be >= 1");
  Rng rng(stream_seed(seed, StreamTag::kData, 0, 0));
  // Topic k puts most of its mass on a window of words starting at k*vocab/topics.
  const std::size_t window = std::max<std::size_t>(1, vocab / topics);
  Corpus corpus;
  corpus.vocab_size = vocab;
  corpus.docs.resize(docs);
  for (auto& doc : corpus.docs) {
    // Each document mixes two or three topics.
    const std::size_t mix = 2 + uniform_index(rng, 2);
    std::vector<std::size_t> chosen(mix);
    for (auto& k : chosen) k = uniform_index(rng, topics);
    doc.resize(doc_length);
    for (auto& w : doc) {
      const std::size_t k = chosen[uniform_index(rng, mix)];
      if (uniform01(rng) < 0.9) {
        w = static_cast<WordId>((k * vocab / topics + uniform_index(rng, window)) % vocab);
      } else {
        w = static_cast<WordId>(uniform_index(rng, vocab));
      }
    }
  }
  return corpus;
}

}  // namespace modelpar::lda
