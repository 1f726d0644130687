#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

namespace hdnet {

// Fixed-size pool of persistent threads running fork-join loops.
//
// parallel_for() splits [0, count) into one contiguous chunk per worker and
// returns once every chunk has finished, so consecutive calls act as a
// barrier. Callers keep results independent of the worker count by making
// each index's computation self-contained (for a layer: one neuron's whole
// weighted sum is done by one thread, in input order).
//
// Loops whose total cost is below `grain` run inline on the calling thread;
// so does any loop started from inside a pool task.
class WorkerPool {
 public:
  static constexpr std::size_t kDefaultGrain = 8192;

  explicit WorkerPool(std::size_t workers = 1, std::size_t grain = kDefaultGrain)
      : workers_(std::max<std::size_t>(workers, 1)), grain_(grain) {
    threads_.reserve(workers_ - 1);
    for (std::size_t k = 1; k < workers_; ++k) {
      threads_.emplace_back([this, k] { worker_loop(k); });
    }
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    start_cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t workers() const noexcept { return workers_; }
  std::size_t grain() const noexcept { return grain_; }

  // Shared single-worker pool for callers that don't pass one.
  static WorkerPool& serial() {
    static WorkerPool pool(1);
    return pool;
  }

  // body(begin, end) is invoked on disjoint chunks covering [0, count).
  // cost_per_item is a rough operation count used only against grain().
  template <class Body>
  void parallel_for(std::size_t count, std::size_t cost_per_item, Body&& body) {
    if (count == 0) return;
    if (workers_ == 1 || count == 1 || in_pool_task() || count * cost_per_item < grain_) {
      body(std::size_t{0}, count);
      return;
    }

    using BodyT = std::remove_reference_t<Body>;
    std::lock_guard dispatch(dispatch_mutex_);
    {
      std::lock_guard lock(mutex_);
      job_.invoke = [](void* ctx, std::size_t b, std::size_t e) { (*static_cast<BodyT*>(ctx))(b, e); };
      job_.ctx = const_cast<void*>(static_cast<const void*>(&body));
      job_.count = count;
      job_.error = nullptr;
      pending_ = workers_ - 1;
      ++generation_;
    }
    start_cv_.notify_all();

    run_chunk(0);

    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    if (job_.error) std::rethrow_exception(job_.error);
  }

 private:
  struct Job {
    void (*invoke)(void*, std::size_t, std::size_t) = nullptr;
    void* ctx = nullptr;
    std::size_t count = 0;
    std::exception_ptr error;
  };

  static bool& in_pool_task() {
    thread_local bool flag = false;
    return flag;
  }

  void run_chunk(std::size_t k) {
    const std::size_t begin = job_.count * k / workers_;
    const std::size_t end = job_.count * (k + 1) / workers_;
    if (begin == end) return;
    in_pool_task() = true;
    try {
      job_.invoke(job_.ctx, begin, end);
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!job_.error) job_.error = std::current_exception();
    }
    in_pool_task() = false;
  }

  void worker_loop(std::size_t k) {
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mutex_);
        start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      run_chunk(k);
      bool last = false;
      {
        std::lock_guard lock(mutex_);
        last = --pending_ == 0;
      }
      if (last) done_cv_.notify_one();
    }
  }

  std::size_t workers_;
  std::size_t grain_;
  std::vector<std::thread> threads_;

  std::mutex dispatch_mutex_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  Job job_;
  std::uint64_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stop_ = false;
};

inline std::size_t default_worker_count() {
  return std::max<unsigned>(std::thread::hardware_concurrency(), 1u);
}

}  // namespace hdnet
