#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

// Batched producer/consumer pool. Every worker first explores the maze (task
// discovery) and switches to consuming queued tasks as soon as its own
// exploration attempt finds the maze exhausted. A batch ends when the maze is
// exhausted, no worker is exploring or executing, and the queue is empty.

namespace sdmrg::mazerunner {

class TaskContext;

struct Task {
    std::function<void(TaskContext&)> run;
    double cost_hint = 1.0;
    std::size_t depth = 0;  // recursion level; set by spawn()
};

/// Source of tasks for one batch. explore() is called concurrently by several
/// workers; each call appends the tasks it discovered to `found` and returns
/// false once the maze has nothing left to hand out. Calls after exhaustion
/// must return false without appending anything.
class Maze {
public:
    virtual ~Maze() = default;
    virtual bool explore(std::vector<Task>& found) = 0;
};

/// Maze over the integer range [0, count) handed out in chunks; `make(i, found)`
/// appends the tasks belonging to index i.
class RangeMaze : public Maze {
public:
    RangeMaze(std::size_t count, std::function<void(std::size_t, std::vector<Task>&)> make,
              std::size_t chunk = 1)
        : count_(count), chunk_(chunk == 0 ? 1 : chunk), make_(std::move(make)) {}

    bool explore(std::vector<Task>& found) override;

private:
    std::size_t count_;
    std::size_t chunk_;
    std::function<void(std::size_t, std::vector<Task>&)> make_;
    std::atomic<std::size_t> next_{0};
};

/// Maze over a fixed task list.
class ListMaze : public Maze {
public:
    explicit ListMaze(std::vector<Task> tasks, std::size_t chunk = 16)
        : tasks_(std::move(tasks)), chunk_(chunk == 0 ? 1 : chunk) {}
    bool explore(std::vector<Task>& found) override;

private:
    std::vector<Task> tasks_;
    std::size_t chunk_;
    std::atomic<std::size_t> next_{0};
};

struct BatchStats {
    std::uint64_t found = 0;
    std::uint64_t executed = 0;
    std::uint64_t failed = 0;
    std::vector<std::string> errors;  // one message per failed task or maze error
    double wall_seconds = 0.0;
    bool guard_tripped = false;
    std::size_t max_depth = 0;
    std::vector<std::uint64_t> executed_per_worker;
};

class DepthGuardExceeded : public std::runtime_error {
public:
    DepthGuardExceeded(const std::string& what, BatchStats stats)
        : std::runtime_error(what), stats_(std::move(stats)) {}
    const BatchStats& stats() const { return stats_; }

private:
    BatchStats stats_;
};

class BatchFailure : public std::runtime_error {
public:
    BatchFailure(const std::string& what, std::size_t iteration, std::vector<BatchStats> stats)
        : std::runtime_error(what), iteration_(iteration), stats_(std::move(stats)) {}
    std::size_t iteration() const { return iteration_; }
    const std::vector<BatchStats>& stats() const { return stats_; }

private:
    std::size_t iteration_;
    std::vector<BatchStats> stats_;
};

inline constexpr std::size_t kDefaultDepthGuard = 64;

class RunnerPool;

class TaskContext {
public:
    std::size_t worker() const { return worker_; }
    std::size_t depth() const { return depth_; }
    /// Queues a child task into the running batch at depth() + 1. Throws
    /// DepthGuardExceeded (failing the calling task) when that exceeds the guard.
    void spawn(Task t);

private:
    friend class RunnerPool;
    TaskContext(RunnerPool& pool, std::size_t worker, std::size_t depth)
        : pool_(pool), worker_(worker), depth_(depth) {}
    RunnerPool& pool_;
    std::size_t worker_;
    std::size_t depth_;
};

class RunnerPool {
public:
    explicit RunnerPool(std::size_t workers);
    ~RunnerPool();
    RunnerPool(const RunnerPool&) = delete;
    RunnerPool& operator=(const RunnerPool&) = delete;

    std::size_t workers() const { return threads_.size(); }

    /// Runs one batch to completion. Task failures are isolated and reported
    /// in the statistics; the batch always drains.
    BatchStats run_batch(Maze& maze, std::size_t depth_guard = kDefaultDepthGuard);

private:
    friend class TaskContext;
    struct Batch;

    void worker_loop(std::size_t index);
    void work_on(Batch& b, std::size_t index);
    void enqueue(Batch& b, Task t);

    std::vector<std::thread> threads_;
    std::mutex run_mutex_;  // one batch at a time

    std::mutex mutex_;
    std::condition_variable start_cv_;
    std::condition_variable done_cv_;
    std::uint64_t generation_ = 0;
    std::size_t finished_ = 0;
    bool stopping_ = false;
    Batch* batch_ = nullptr;
};

/// Iterations synchronized to the host algorithm: maze i is built only after
/// batch i-1 completed. Throws BatchFailure for the first failing batch (after
/// it drained), carrying the statistics gathered so far.
std::vector<BatchStats> run_iterative(RunnerPool& pool, std::size_t iterations,
                                      const std::function<std::unique_ptr<Maze>(std::size_t)>& make_maze);

/// Runs a self-feeding task tree rooted at `root` as one batch. Throws
/// DepthGuardExceeded with the partial statistics when the guard trips.
BatchStats recursive_feed(RunnerPool& pool, Task root, std::size_t depth_guard = kDefaultDepthGuard);

/// Concurrent keyed accumulator with one mutex per key.
template <class Key, class Value>
class KeyedSink {
public:
    void accumulate(const Key& key, const Value& delta) {
        Entry* e = entry(key);
        std::lock_guard lock(e->mutex);
        e->value += delta;
    }

    template <class Fn>
    void update(const Key& key, Fn&& fn) {
        Entry* e = entry(key);
        std::lock_guard lock(e->mutex);
        fn(e->value);
    }

    std::map<Key, Value> snapshot() const {
        std::shared_lock lock(map_mutex_);
        std::map<Key, Value> out;
        for (const auto& [k, e] : entries_) {
            std::lock_guard el(e->mutex);
            out.emplace(k, e->value);
        }
        return out;
    }

private:
    struct Entry {
        mutable std::mutex mutex;
        Value value{};
    };

    Entry* entry(const Key& key) {
        {
            std::shared_lock lock(map_mutex_);
            if (auto it = entries_.find(key); it != entries_.end()) return it->second.get();
        }
        std::unique_lock lock(map_mutex_);
        auto& slot = entries_[key];
        if (!slot) slot = std::make_unique<Entry>();
        return slot.get();
    }

    mutable std::shared_mutex map_mutex_;
    std::map<Key, std::unique_ptr<Entry>> entries_;
};

}  // namespace sdmrg::mazerunner
