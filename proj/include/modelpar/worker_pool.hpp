// Copyright 2026 The modelpar Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "modelpar/errors.hpp"

namespace modelpar {

/// Fixed set of worker threads that execute one task per worker per phase and
/// meet at a barrier with a deadline.
class WorkerPool {
 public:
  using Task = std::function<void(WorkerId)>;

  explicit WorkerPool(std::size_t workers) : slots_(workers) {
    threads_.reserve(workers);
    for (std::size_t p = 0; p < workers; ++p) threads_.emplace_back([this, p] { loop(p); });
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    work_cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  std::size_t size() const noexcept { return slots_.size(); }

  /// Runs task(p) on every worker p and waits for all of them. Throws
  /// BarrierTimeout naming the lowest-numbered worker still busy at the
  /// deadline; otherwise rethrows the first worker exception (by worker id).
  void run(Task task, std::chrono::milliseconds timeout, std::uint64_t round) {
    auto shared = std::make_shared<Task>(std::move(task));
    std::unique_lock lock(mutex_);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    // A worker may still be finishing a task from a round that timed out.
    if (!done_cv_.wait_until(lock, deadline, [&] { return all_idle(); }))
      throw BarrierTimeout(first_busy(), round);
    for (auto& s : slots_) {
      s.pending = shared;
      s.busy = true;
      s.error = nullptr;
    }
    ++generation_;
    work_cv_.notify_all();
    if (!done_cv_.wait_until(lock, deadline, [&] { return all_idle(); }))
      throw BarrierTimeout(first_busy(), round);
    for (auto& s : slots_)
      if (s.error) std::rethrow_exception(s.error);
  }

 private:
  struct Slot {
    std::shared_ptr<Task> pending;
    bool busy = false;
    std::exception_ptr error;
  };

  bool all_idle() const {
    for (const auto& s : slots_)
      if (s.busy) return false;
    return true;
  }

  WorkerId first_busy() const {
    for (std::size_t p = 0; p < slots_.size(); ++p)
      if (slots_[p].busy) return p;
    return 0;
  }

  void loop(std::size_t p) {
    std::uint64_t seen = 0;
    std::unique_lock lock(mutex_);
    for (;;) {
      work_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
      if (stopping_ && generation_ == seen) return;
      seen = generation_;
      auto task = std::move(slots_[p].pending);
      lock.unlock();
      std::exception_ptr error;
      try {
        (*task)(p);
      } catch (...) {
        error = std::current_exception();
      }
      task.reset();
      lock.lock();
      slots_[p].error = error;
      slots_[p].busy = false;
      done_cv_.notify_all();
    }
  }

  std::vector<Slot> slots_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  std::uint64_t generation_ = 0;
  bool stopping_ = false;
};

}  // namespace modelpar
