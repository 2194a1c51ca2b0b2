// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace modelpar {

using WorkerId = std::size_t;
using VariableId = std::uint64_t;

/// Malformed input data (file contents, inconsistent tables).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnknownVariable : public std::out_of_range {
 public:
  explicit UnknownVariable(VariableId id)
      : std::out_of_range("unknown variable id " + std::to_string(id)), id_(id) {}
  VariableId id() const noexcept { return id_; }

 private:
  VariableId id_;
};

/// A worker failed to reach the round barrier before the deadline.
class BarrierTimeout : public std::runtime_error {
 public:
  BarrierTimeout(WorkerId worker, std::uint64_t round)
      : std::runtime_error("barrier timeout in round " + std::to_string(round) +
                           ": worker " + std::to_string(worker) + " did not finish push"),
        worker_(worker),
        round_(round) {}
  WorkerId worker() const noexcept { return worker_; }
  std::uint64_t round() const noexcept { return round_; }

 private:
  WorkerId worker_;
  std::uint64_t round_;
};

/// Violation of an engine-level contract (overlapping assignments, stale reads).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace modelpar
