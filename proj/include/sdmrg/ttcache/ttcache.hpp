#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sdmrg/mazerunner/mazerunner.hpp"

// Bump-offset arena driven by a depth-first walk over a data dependency tree.
// Loading a node appends its payload at the current offset; leaving the node
// retracts the offset, so siblings reuse the same bytes and every ancestor
// payload is loaded exactly once for its whole subtree.

namespace sdmrg::ttcache {

class CapacityExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LifoViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct Region {
    std::size_t start = 0;
    std::size_t size = 0;
    bool operator==(const Region&) const = default;
};

struct TraversalStats {
    std::uint64_t loads = 0;
    std::uint64_t bytes_copied = 0;
    std::size_t peak_offset = 0;

    TraversalStats& operator+=(const TraversalStats& o) {
        loads += o.loads;
        bytes_copied += o.bytes_copied;
        peak_offset = std::max(peak_offset, o.peak_offset);
        return *this;
    }
};

using Loader = std::function<void(std::span<std::byte>)>;

class Arena {
public:
    explicit Arena(std::size_t capacity);

    std::size_t capacity() const { return capacity_; }
    std::size_t offset() const { return offset_; }

    /// Reserves [offset, offset + size) and lets `loader` fill it.
    Region load(std::size_t size, const Loader& loader);
    /// Copies `data` to the top of the arena.
    Region load(std::span<const std::byte> data);
    /// Retracts the offset past `r`, which must be the most recent live load.
    void unload(const Region& r);

    std::span<std::byte> bytes(const Region& r);
    std::span<const std::byte> bytes(const Region& r) const;
    /// Occupied prefix [0, offset).
    std::span<const std::byte> prefix() const { return {buffer_.get(), offset_}; }

    template <class T>
    std::span<T> as(const Region& r) {
        return {reinterpret_cast<T*>(buffer_.get() + r.start), r.size / sizeof(T)};
    }
    template <class T>
    std::span<const T> as(const Region& r) const {
        return {reinterpret_cast<const T*>(buffer_.get() + r.start), r.size / sizeof(T)};
    }

    /// Counters since construction or the last reset_stats().
    const TraversalStats& stats() const { return stats_; }
    void reset_stats() { stats_ = {}; stats_.peak_offset = offset_; }

private:
    struct Free {
        void operator()(std::byte* p) const;
    };
    std::unique_ptr<std::byte[], Free> buffer_;
    std::size_t capacity_ = 0;
    std::size_t offset_ = 0;
    std::vector<Region> live_;
    TraversalStats stats_;
};

struct DependencyNode;

/// What a node task sees: the arena and the regions of every payload on the
/// root-to-node path, in path order (the last one is the node's own).
struct VisitContext {
    Arena& arena;
    std::span<const Region> path;
    const DependencyNode& node;

    std::span<const std::byte> payload(std::size_t level) const { return arena.bytes(path[level]); }
    template <class T>
    std::span<const T> payload_as(std::size_t level) const {
        return std::as_const(arena).as<T>(path[level]);
    }
};

struct DependencyNode {
    std::size_t id = 0;
    std::size_t payload_size = 0;  // bytes
    Loader loader;                 // copies the payload into the given region
    std::vector<std::function<void(const VisitContext&)>> tasks;
    std::vector<DependencyNode> children;
};

/// Loads the node, runs its tasks, visits the children in stored order and
/// unloads. Offsets unwind correctly when a task throws.
void visit(const DependencyNode& node, Arena& arena, std::vector<Region>& path);

/// Largest root-to-node payload sum: the arena capacity the walk needs.
std::size_t plan_check(const DependencyNode& root);

/// Checks plan_check against the free arena space (CapacityExceeded before any
/// task runs), then walks the tree. Resets the arena counters and returns
/// those of this walk; peak_offset is measured from the starting offset.
TraversalStats ttcache_run(const DependencyNode& root, Arena& arena);

std::size_t node_count(const DependencyNode& root);
/// Bytes a strategy that reloads the full root-to-node prefix for every node
/// would copy: the sum of path sums over all nodes.
std::uint64_t naive_copy_bytes(const DependencyNode& root);

/// Pre-processing hook: applies `order` to the child list of every node.
void reorder(DependencyNode& root, const std::function<void(std::vector<DependencyNode>&)>& order);

/// Walks independent trees concurrently, one task per root; each task uses the
/// arena of the worker running it, so arenas.size() must be >= pool.workers().
/// Throws the first task error after the batch drained.
TraversalStats run_forest(mazerunner::RunnerPool& pool, std::span<const DependencyNode> roots,
                          std::span<Arena> arenas);

}  // namespace sdmrg::ttcache
