// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "modelpar/cli/run_config.hpp"
#include "modelpar/engine.hpp"
#include "modelpar/lasso/design_matrix.hpp"
#include "modelpar/lasso/lasso_app.hpp"
#include "modelpar/lda/corpus.hpp"
#include "modelpar/lda/lda_app.hpp"
#include "modelpar/mf/mf_app.hpp"
#include "modelpar/mf/ratings.hpp"

namespace modelpar::cli {

enum ExitCode : int { kOk = 0, kUsageError = 1, kDataError = 2, kRuntimeError = 3 };

/// CSV metrics: `round,seconds,<objective columns...>`, one row per round,
/// flushed as it is written.
class MetricsWriter {
 public:
  MetricsWriter(std::ostream& out, std::vector<std::string> columns) : out_(&out), columns_(std::move(columns)) {
    *out_ << "round,seconds";
    for (const auto& c : columns_) *out_ << ',' << c;
    *out_ << '\n';
    out_->flush();
  }

  void write(std::uint64_t round, double seconds, const std::vector<double>& values) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", seconds);
    *out_ << round << ',' << buf;
    for (double v : values) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
      *out_ << ',' << std::string_view(buf, end - buf);
    }
    *out_ << '\n';
    out_->flush();
  }

 private:
  std::ostream* out_;
  std::vector<std::string> columns_;
};

inline std::vector<std::string> metric_columns(AppKind app) {
  switch (app) {
    case AppKind::kLda: return {"log_likelihood", "s_error"};
    case AppKind::kMf: return {"objective"};
    case AppKind::kLasso: return {"objective", "nnz_beta", "batch_size"};
  }
  return {};
}

inline std::vector<double> metric_values(AppKind app, const RoundReport& r) {
  auto extra = [&](const char* k) {
    auto it = r.extra.find(k);
    return it == r.extra.end() ? 0.0 : it->second;
  };
  switch (app) {
    case AppKind::kLda: return {r.objective, extra("s_error")};
    case AppKind::kMf: return {r.objective};
    case AppKind::kLasso: return {r.objective, extra("nnz_beta"), extra("batch_size")};
  }
  return {};
}

struct RunOutcome {
  std::vector<RoundReport> reports;
  std::vector<std::map<std::string, std::size_t>> residency;  // per worker
};

/// Loaded datasets kept alive for the apps that reference them.
struct Datasets {
  lda::Corpus corpus;
  mf::SparseRatings ratings;
  lasso::DesignMatrix design;
  std::vector<double> response;
};

inline Datasets load_datasets(const RunConfig& config) {
  Datasets d;
  switch (config.app) {
    case AppKind::kLda: d.corpus = lda::load_corpus(config.corpus); break;
    case AppKind::kMf: d.ratings = mf::load_ratings(config.ratings); break;
    case AppKind::kLasso:
      d.design = lasso::load_design(config.design);
      d.response = lasso::load_vector(config.response);
      if (d.response.size() != d.design.rows)
        throw DataError(config.response + ": " + std::to_string(d.response.size()) + " values, design has n=" +
                        std::to_string(d.design.rows));
      lasso::standardize(d.design, d.response);
      break;
  }
  return d;
}

namespace detail {
template <typename App>
RunOutcome drive(App& app, const EngineConfig& engine_config, const std::function<bool(const RoundReport&)>& stop,
                 const std::function<void(const RoundReport&)>& on_round) {
  Engine<App> engine(app, engine_config);
  RunOutcome out;
  out.reports = engine.run(stop, on_round);
  for (WorkerId p = 0; p < engine_config.workers; ++p) out.residency.push_back(engine.max_resident(p));
  return out;
}
}  // namespace detail

/// Runs the configured application for config.rounds rounds (or until the
/// threshold is reached: objective <= threshold for mf/lasso, log-likelihood
/// >= threshold for lda), streaming one metrics row per round.
inline RunOutcome execute(const RunConfig& config, const Datasets& data, MetricsWriter* metrics,
                          std::optional<std::uint64_t> rounds_override = std::nullopt) {
  EngineConfig ec = config.engine();
  if (rounds_override) ec.max_rounds = *rounds_override;
  double elapsed = 0.0;
  auto on_round = [&](const RoundReport& r) {
    elapsed += r.wall_time;
    if (metrics) metrics->write(r.round, elapsed, metric_values(config.app, r));
  };
  std::function<bool(const RoundReport&)> stop;
  if (config.threshold) {
    const double t = *config.threshold;
    if (config.app == AppKind::kLda) stop = [t](const RoundReport& r) { return r.objective >= t; };
    else stop = [t](const RoundReport& r) { return r.objective <= t; };
  }
  switch (config.app) {
    case AppKind::kLda: {
      lda::LdaApp app(data.corpus, config.lda_params());
      return detail::drive(app, ec, stop, on_round);
    }
    case AppKind::kMf: {
      mf::MfApp app(data.ratings, config.mf_params());
      return detail::drive(app, ec, stop, on_round);
    }
    case AppKind::kLasso: {
      lasso::LassoParams p;
      p.lambda = config.lambda.value_or(config.lambda_ratio * lasso::lambda_max(data.design, data.response));
      p.eta = config.eta;
      p.batch = config.batch;
      p.candidates = config.candidates;
      p.rho = config.rho;
      p.mode = config.scheduler;
      lasso::LassoApp app(data.design, data.response, p);
      return detail::drive(app, ec, stop, on_round);
    }
  }
  return {};
}

/// Maps exceptions to exit codes and prints a diagnostic.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

/// Opens `path` for writing, or returns stdout for "-".
class OutputFile {
 public:
  explicit OutputFile(const std::string& path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error(path + ": cannot open for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

inline int cmd_run(const RunConfig& config, std::ostream& err) {
  return guarded(err, [&] {
    if (const auto bad = config.range_errors(); !bad.empty()) {
      std::string msg = "invalid configuration:";
      for (const auto& b : bad) msg += "\n  " + b;
      throw ConfigError(msg);
    }
    const Datasets data = load_datasets(config);
    OutputFile out(config.metrics);
    MetricsWriter writer(out.stream(), metric_columns(config.app));
    execute(config, data, &writer);
    return static_cast<int>(kOk);
  });
}

/// Rounds needed to visit every variable block once.
inline std::uint64_t full_cycle_rounds(const RunConfig& config) {
  switch (config.app) {
    case AppKind::kLda: return config.workers;
    case AppKind::kMf: return 2 * (config.blocks ? config.blocks : config.workers);
    case AppKind::kLasso: return 1;
  }
  return 1;
}

/// Per-worker maximum number of variables of each store table read in a
/// single round, as CSV `worker,table,max_resident`. Runs config.rounds
/// rounds, or one full schedule cycle when rounds is 0.
inline RunOutcome memstats(const RunConfig& config, const Datasets& data) {
  const std::uint64_t rounds = config.rounds ? config.rounds : full_cycle_rounds(config);
  return execute(config, data, nullptr, rounds);
}

inline void write_memstats(std::ostream& out, const RunOutcome& outcome) {
  out << "worker,table,max_resident\n";
  for (std::size_t p = 0; p < outcome.residency.size(); ++p)
    for (const auto& [table, count] : outcome.residency[p]) out << p << ',' << table << ',' << count << '\n';
}

inline int cmd_memstats(const RunConfig& config, std::ostream& err) {
  return guarded(err, [&] {
    if (const auto bad = config.range_errors(); !bad.empty()) {
      std::string msg = "invalid configuration:";
      for (const auto& b : bad) msg += "\n  " + b;
      throw ConfigError(msg);
    }
    const Datasets data = load_datasets(config);
    const auto outcome = memstats(config, data);
    OutputFile out(config.metrics);
    write_memstats(out.stream(), outcome);
    return static_cast<int>(kOk);
  });
}

struct GenLassoPaths {
  std::string design, response, true_beta;
};

inline GenLassoPaths gen_lasso_paths(const std::string& prefix) {
  return {prefix + "_X.txt", prefix + "_y.txt", prefix + "_beta.txt"};
}

/// Writes a synthetic problem as `<prefix>_X.txt`, `<prefix>_y.txt` and
/// `<prefix>_beta.txt`.
inline int cmd_gen_lasso(std::size_t n, std::size_t features, std::uint64_t seed, const std::string& prefix,
                         std::optional<std::size_t> nonzeros, std::ostream& err) {
  return guarded(err, [&] {
    lasso::SyntheticOptions opts;
    opts.nonzeros = nonzeros;
    const auto problem = lasso::gen_synthetic(n, features, seed, opts);
    const auto paths = gen_lasso_paths(prefix);
    auto open = [](const std::string& path) {
      std::ofstream f(path);
      if (!f) throw std::runtime_error(path + ": cannot open for writing");
      return f;
    };
    {
      auto f = open(paths.design);
      lasso::write_design(f, problem.x);
      if (!f) throw std::runtime_error(paths.design + ": write failed");
    }
    {
      auto f = open(paths.response);
      lasso::write_vector(f, problem.y);
      if (!f) throw std::runtime_error(paths.response + ": write failed");
    }
    {
      auto f = open(paths.true_beta);
      lasso::write_vector(f, problem.true_beta);
      if (!f) throw std::runtime_error(paths.true_beta + ": write failed");
    }
    return static_cast<int>(kOk);
  });
}

}  // namespace modelpar::cli
