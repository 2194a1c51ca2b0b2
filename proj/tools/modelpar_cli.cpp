// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "modelpar/cli/commands.hpp"
#include "modelpar/cli/run_config.hpp"

namespace {

using modelpar::cli::KeyValues;
using modelpar::cli::RunConfig;

// Flags that mirror config keys (dashes map to underscores).
struct RunFlags {
  std::string config_path;
  std::string dump_config;
  std::map<std::string, std::string> values;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    cmd.add_option("--dump-config", dump_config, "write the effective config (defaults filled) to this path");
    for (const auto& key : RunConfig::known_keys()) {
      std::string flag = "--" + key;
      for (auto& ch : flag)
        if (ch == '_') ch = '-';
      if (key == "workers") flag += ",-P";
      cmd.add_option_function<std::string>(
          flag, [this, key](const std::string& v) { values[key] = v; }, "overrides config key '" + key + "'");
    }
  }

  RunConfig resolve() const {
    KeyValues kv;
    if (!config_path.empty()) kv = modelpar::cli::load_key_values(config_path);
    for (const auto& [k, v] : values) kv[k] = v;
    RunConfig config = RunConfig::from_key_values(kv);
    if (!dump_config.empty()) {
      std::ofstream out(dump_config);
      if (!out) throw std::runtime_error(dump_config + ": cannot open for writing");
      out << config.to_text();
    }
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-parallel schedule/push/pull engine with LDA, MF and Lasso applications"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "run an application and write per-round metrics as CSV");
  run_flags.add_to(*run);

  RunFlags mem_flags;
  auto* mem = app.add_subcommand("memstats", "report per-worker resident model variables per table");
  mem_flags.add_to(*mem);

  std::size_t n = 0, features = 0;
  std::uint64_t seed = 0;
  std::string out_prefix;
  std::optional<std::size_t> nonzeros;
  auto* gen = app.add_subcommand("gen-lasso", "generate a synthetic Lasso problem with correlated adjacent features");
  gen->add_option("--n", n, "samples (rows)")->required();
  gen->add_option("--features,-J", features, "features (columns)")->required();
  gen->add_option("--seed", seed, "RNG seed");
  gen->add_option("--out", out_prefix, "output prefix; writes <out>_X.txt, <out>_y.txt, <out>_beta.txt")->required();
  gen->add_option("--nonzeros", nonzeros, "nonzeros per feature (default min(25, n))");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return modelpar::cli::kUsageError;
  }

  auto resolve = [](const RunFlags& flags, RunConfig& out) {
    return modelpar::cli::guarded(std::cerr, [&] {
      out = flags.resolve();
      return static_cast<int>(modelpar::cli::kOk);
    });
  };

  if (run->parsed()) {
    RunConfig config;
    if (int rc = resolve(run_flags, config); rc != 0) return rc;
    return modelpar::cli::cmd_run(config, std::cerr);
  }
  if (mem->parsed()) {
    RunConfig config;
    if (int rc = resolve(mem_flags, config); rc != 0) return rc;
    return modelpar::cli::cmd_memstats(config, std::cerr);
  }
  if (gen->parsed()) return modelpar::cli::cmd_gen_lasso(n, features, seed, out_prefix, nonzeros, std::cerr);
  return modelpar::cli::kUsageError;
}
