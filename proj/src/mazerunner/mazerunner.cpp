#include "sdmrg/mazerunner/mazerunner.hpp"

#include <algorithm>
#include <chrono>
#include <exception>

namespace sdmrg::mazerunner {

bool RangeMaze::explore(std::vector<Task>& found) {
    const std::size_t first = next_.fetch_add(chunk_, std::memory_order_relaxed);
    if (first >= count_) return false;
    const std::size_t last = std::min(count_, first + chunk_);
    for (std::size_t i = first; i < last; ++i) make_(i, found);
    return last < count_;
}

bool ListMaze::explore(std::vector<Task>& found) {
    const std::size_t first = next_.fetch_add(chunk_, std::memory_order_relaxed);
    if (first >= tasks_.size()) return false;
    const std::size_t last = std::min(tasks_.size(), first + chunk_);
    for (std::size_t i = first; i < last; ++i) found.push_back(tasks_[i]);
    return last < tasks_.size();
}

struct RunnerPool::Batch {
    Maze* maze = nullptr;
    std::size_t depth_guard = kDefaultDepthGuard;

    std::mutex mutex;
    std::condition_variable cv;
    std::deque<Task> queue;
    std::size_t explorers = 0;  // workers currently inside the maze
    std::size_t running = 0;    // tasks being executed
    bool exhausted = false;

    BatchStats stats;  // guarded by mutex

    bool finished() const { return exhausted && explorers == 0 && running == 0 && queue.empty(); }
};

void TaskContext::spawn(Task t) {
    t.depth = depth_ + 1;
    auto* b = pool_.batch_;
    if (t.depth > b->depth_guard) {
        {
            std::lock_guard lock(b->mutex);
            b->stats.guard_tripped = true;
        }
        throw DepthGuardExceeded("task spawn exceeds depth guard " +
                                     std::to_string(b->depth_guard),
                                 {});
    }
    pool_.enqueue(*b, std::move(t));
}

RunnerPool::RunnerPool(std::size_t workers) {
    if (workers == 0) throw std::invalid_argument("RunnerPool: worker count must be positive");
    threads_.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this, i] { worker_loop(i); });
}

RunnerPool::~RunnerPool() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    start_cv_.notify_all();
    for (auto& t : threads_) t.join();
}

void RunnerPool::enqueue(Batch& b, Task t) {
    {
        std::lock_guard lock(b.mutex);
        ++b.stats.found;
        b.stats.max_depth = std::max(b.stats.max_depth, t.depth);
        b.queue.push_back(std::move(t));
    }
    b.cv.notify_one();
}

void RunnerPool::worker_loop(std::size_t index) {
    std::uint64_t seen = 0;
    for (;;) {
        Batch* b = nullptr;
        {
            std::unique_lock lock(mutex_);
            start_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
            if (stopping_) return;
            seen = generation_;
            b = batch_;
        }
        work_on(*b, index);
        {
            std::lock_guard lock(mutex_);
            ++finished_;
        }
        done_cv_.notify_all();
    }
}

void RunnerPool::work_on(Batch& b, std::size_t index) {
    // Discovery phase.
    {
        // Every worker enters the maze at least once per batch, even if another
        // worker has already found it exhausted.
        std::unique_lock lock(b.mutex);
        {
            ++b.explorers;
            std::vector<Task> found;
            bool more = true;
            do {
                lock.unlock();
                found.clear();
                std::string error;
                try {
                    more = b.maze->explore(found);
                } catch (const std::exception& e) {
                    more = false;
                    error = std::string("maze exploration failed: ") + e.what();
                } catch (...) {
                    more = false;
                    error = "maze exploration failed";
                }
                lock.lock();
                if (!error.empty()) {
                    ++b.stats.failed;
                    b.stats.errors.push_back(std::move(error));
                }
                b.stats.found += found.size();
                for (auto& t : found) b.queue.push_back(std::move(t));
                if (!found.empty()) b.cv.notify_all();
                if (!more) b.exhausted = true;
            } while (more && !b.exhausted);
            --b.explorers;
            if (b.finished()) b.cv.notify_all();
        }
    }

    // Consumption phase.
    std::uint64_t executed = 0;
    for (;;) {
        Task task;
        {
            std::unique_lock lock(b.mutex);
            b.cv.wait(lock, [&] { return !b.queue.empty() || b.finished(); });
            if (b.queue.empty()) break;
            task = std::move(b.queue.front());
            b.queue.pop_front();
            ++b.running;
        }
        std::string error;
        TaskContext ctx(*this, index, task.depth);
        try {
            if (task.run) task.run(ctx);
        } catch (const std::exception& e) {
            error = e.what();
            if (error.empty()) error = "task failed";
        } catch (...) {
            error = "task failed with a non-standard exception";
        }
        ++executed;
        bool done = false;
        {
            std::lock_guard lock(b.mutex);
            --b.running;
            ++b.stats.executed;
            if (!error.empty()) {
                ++b.stats.failed;
                b.stats.errors.push_back(std::move(error));
            }
            done = b.finished();
        }
        if (done) b.cv.notify_all();
    }
    std::lock_guard lock(b.mutex);
    b.stats.executed_per_worker[index] = executed;
}

BatchStats RunnerPool::run_batch(Maze& maze, std::size_t depth_guard) {
    std::lock_guard run_lock(run_mutex_);
    Batch b;
    b.maze = &maze;
    b.depth_guard = depth_guard;
    b.stats.executed_per_worker.assign(threads_.size(), 0);
    const auto t0 = std::chrono::steady_clock::now();
    {
        std::lock_guard lock(mutex_);
        batch_ = &b;
        finished_ = 0;
        ++generation_;
    }
    start_cv_.notify_all();
    {
        std::unique_lock lock(mutex_);
        done_cv_.wait(lock, [&] { return finished_ == threads_.size(); });
        batch_ = nullptr;
    }
    b.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::move(b.stats);
}

std::vector<BatchStats> run_iterative(
    RunnerPool& pool, std::size_t iterations,
    const std::function<std::unique_ptr<Maze>(std::size_t)>& make_maze) {
    std::vector<BatchStats> all;
    all.reserve(iterations);
    for (std::size_t i = 0; i < iterations; ++i) {
        auto maze = make_maze(i);
        all.push_back(pool.run_batch(*maze));
        const auto& s = all.back();
        if (s.failed > 0) {
            std::string msg = "iteration " + std::to_string(i) + " failed: " +
                              (s.errors.empty() ? std::string("unknown error") : s.errors.front());
            throw BatchFailure(msg, i, std::move(all));
        }
    }
    return all;
}

BatchStats recursive_feed(RunnerPool& pool, Task root, std::size_t depth_guard) {
    root.depth = 0;
    std::vector<Task> tasks;
    tasks.push_back(std::move(root));
    ListMaze maze(std::move(tasks));
    BatchStats s = pool.run_batch(maze, depth_guard);
    if (s.guard_tripped)
        throw DepthGuardExceeded("recursive feed exceeded depth guard " + std::to_string(depth_guard),
                                 std::move(s));
    return s;
}

}  // namespace sdmrg::mazerunner
