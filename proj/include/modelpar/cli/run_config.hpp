// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "modelpar/engine.hpp"
#include "modelpar/errors.hpp"
#include "modelpar/lasso/lasso_app.hpp"
#include "modelpar/lda/topic_state.hpp"
#include "modelpar/mf/mf_app.hpp"

namespace modelpar::cli {

enum class AppKind { kLda, kMf, kLasso };

inline AppKind parse_app(const std::string& s) {
  if (s == "lda") return AppKind::kLda;
  if (s == "mf") return AppKind::kMf;
  if (s == "lasso") return AppKind::kLasso;
  throw ConfigError("app must be one of lda, mf, lasso (got '" + s + "')");
}

inline const char* to_string(AppKind a) {
  switch (a) {
    case AppKind::kLda: return "lda";
    case AppKind::kMf: return "mf";
    case AppKind::kLasso: return "lasso";
  }
  return "?";
}

/// Flat `key = value` settings, '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  return parse_key_values(in, path);
}

/// Everything needed for one run, with defaults filled in.
struct RunConfig {
  AppKind app = AppKind::kLasso;
  std::size_t workers = 1;
  std::uint64_t rounds = 10;
  std::uint64_t seed = 0;
  std::string metrics = "-";
  std::int64_t barrier_timeout_ms = 60'000;
  std::optional<double> threshold;

  // lda
  std::string corpus;
  std::size_t topics = 10;
  double alpha = 0.1;
  double gamma = 0.01;

  // mf
  std::string ratings;
  std::size_t rank = 5;
  std::size_t blocks = 0;

  // shared by mf and lasso; mf defaults to 0.05, lasso to lambda_ratio · λ_max
  std::optional<double> lambda;

  // lasso
  std::string design;
  std::string response;
  double lambda_ratio = 0.1;
  double eta = 1e-6;
  std::size_t batch = 1;
  std::size_t candidates = 0;
  double rho = 0.1;
  lasso::SchedulerMode scheduler = lasso::SchedulerMode::kPriority;

  EngineConfig engine() const {
    EngineConfig e;
    e.workers = workers;
    e.max_rounds = rounds;
    e.seed = seed;
    e.barrier_timeout = std::chrono::milliseconds(barrier_timeout_ms);
    return e;
  }

  lda::LdaParams lda_params() const { return {topics, alpha, gamma}; }
  mf::MfParams mf_params() const { return {rank, lambda.value_or(0.05), blocks}; }

  static const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "app",   "workers", "rounds", "seed",   "metrics",  "barrier_timeout_ms", "threshold", "corpus",
        "topics", "alpha",  "gamma",  "ratings", "rank",    "blocks",             "lambda",    "design",
        "response", "lambda_ratio", "eta", "batch", "candidates", "rho", "scheduler"};
    return keys;
  }

  /// Builds a config from settings. Unknown keys and unparsable or
  /// out-of-range values are collected and reported together.
  static RunConfig from_key_values(const KeyValues& kv) {
    RunConfig c;
    std::vector<std::string> bad;
    const auto& known = known_keys();
    for (const auto& [k, v] : kv)
      if (std::find(known.begin(), known.end(), k) == known.end()) bad.push_back(k + " (unknown key)");

    auto get = [&](const char* key) -> const std::string* {
      auto it = kv.find(key);
      return it == kv.end() ? nullptr : &it->second;
    };
    auto as_uint = [&](const char* key, auto& out) {
      if (const auto* s = get(key)) {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
        if (ec != std::errc() || p != s->data() + s->size()) bad.push_back(std::string(key) + " (not an unsigned integer)");
        else out = static_cast<std::remove_reference_t<decltype(out)>>(v);
      }
    };
    auto as_double = [&](const char* key, auto& out) {
      if (const auto* s = get(key)) {
        double v = 0;
        auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
        if (ec != std::errc() || p != s->data() + s->size()) bad.push_back(std::string(key) + " (not a number)");
        else out = v;
      }
    };
    auto as_string = [&](const char* key, std::string& out) {
      if (const auto* s = get(key)) out = *s;
    };

    if (const auto* s = get("app")) {
      try {
        c.app = parse_app(*s);
      } catch (const ConfigError&) {
        bad.push_back("app (must be lda, mf or lasso)");
      }
    } else {
      bad.push_back("app (required)");
    }
    as_uint("workers", c.workers);
    as_uint("rounds", c.rounds);
    as_uint("seed", c.seed);
    as_string("metrics", c.metrics);
    {
      std::uint64_t t = static_cast<std::uint64_t>(c.barrier_timeout_ms);
      as_uint("barrier_timeout_ms", t);
      c.barrier_timeout_ms = static_cast<std::int64_t>(t);
    }
    if (get("threshold")) {
      double t = 0;
      as_double("threshold", t);
      c.threshold = t;
    }
    as_string("corpus", c.corpus);
    as_uint("topics", c.topics);
    as_double("alpha", c.alpha);
    as_double("gamma", c.gamma);
    as_string("ratings", c.ratings);
    as_uint("rank", c.rank);
    as_uint("blocks", c.blocks);
    if (get("lambda")) {
      double l = 0;
      as_double("lambda", l);
      c.lambda = l;
    }
    as_string("design", c.design);
    as_string("response", c.response);
    as_double("lambda_ratio", c.lambda_ratio);
    as_double("eta", c.eta);
    as_uint("batch", c.batch);
    as_uint("candidates", c.candidates);
    as_double("rho", c.rho);
    if (const auto* s = get("scheduler")) {
      try {
        c.scheduler = lasso::parse_scheduler_mode(*s);
      } catch (const ConfigError&) {
        bad.push_back("scheduler (must be priority or random)");
      }
    }

    for (const auto& b : c.range_errors()) bad.push_back(b);
    if (!bad.empty()) {
      std::string msg = "invalid configuration:";
      for (const auto& b : bad) msg += "\n  " + b;
      throw ConfigError(msg);
    }
    return c;
  }

  std::vector<std::string> range_errors() const {
    std::vector<std::string> bad;
    if (workers < 1) bad.push_back("workers (must be >= 1)");
    if (barrier_timeout_ms <= 0) bad.push_back("barrier_timeout_ms (must be > 0)");
    switch (app) {
      case AppKind::kLda:
        if (corpus.empty()) bad.push_back("corpus (required for app=lda)");
        if (topics < 1) bad.push_back("topics (must be >= 1)");
        if (!(alpha > 0)) bad.push_back("alpha (must be > 0)");
        if (!(gamma > 0)) bad.push_back("gamma (must be > 0)");
        break;
      case AppKind::kMf:
        if (ratings.empty()) bad.push_back("ratings (required for app=mf)");
        if (rank < 1) bad.push_back("rank (must be >= 1)");
        if (lambda && !(*lambda > 0)) bad.push_back("lambda (must be > 0)");
        break;
      case AppKind::kLasso:
        if (design.empty()) bad.push_back("design (required for app=lasso)");
        if (response.empty()) bad.push_back("response (required for app=lasso)");
        if (lambda && !(*lambda > 0)) bad.push_back("lambda (must be > 0)");
        if (!(lambda_ratio > 0)) bad.push_back("lambda_ratio (must be > 0)");
        if (!(eta > 0)) bad.push_back("eta (must be > 0)");
        if (batch < 1) bad.push_back("batch (must be >= 1)");
        if (candidates != 0 && candidates < batch) bad.push_back("candidates (must be >= batch)");
        if (!(rho > 0 && rho <= 1)) bad.push_back("rho (must be in (0, 1])");
        break;
    }
    return bad;
  }

  /// Effective settings (defaults filled) as `key = value` lines; parsing
  /// the text back reproduces this config.
  std::string to_text() const {
    std::ostringstream out;
    auto num = [](double v) {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
      return std::string(buf, end);
    };
    out << "app = " << to_string(app) << '\n'
        << "workers = " << workers << '\n'
        << "rounds = " << rounds << '\n'
        << "seed = " << seed << '\n'
        << "metrics = " << metrics << '\n'
        << "barrier_timeout_ms = " << barrier_timeout_ms << '\n';
    if (threshold) out << "threshold = " << num(*threshold) << '\n';
    out << "corpus = " << corpus << '\n'
        << "topics = " << topics << '\n'
        << "alpha = " << num(alpha) << '\n'
        << "gamma = " << num(gamma) << '\n'
        << "ratings = " << ratings << '\n'
        << "rank = " << rank << '\n'
        << "blocks = " << blocks << '\n';
    if (lambda) out << "lambda = " << num(*lambda) << '\n';
    out << "design = " << design << '\n'
        << "response = " << response << '\n'
        << "lambda_ratio = " << num(lambda_ratio) << '\n'
        << "eta = " << num(eta) << '\n'
        << "batch = " << batch << '\n'
        << "candidates = " << candidates << '\n'
        << "rho = " << num(rho) << '\n'
        << "scheduler = " << lasso::to_string(scheduler) << '\n';
    return out.str();
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

}  // namespace modelpar::cli
