#include "sdmrg/ttcache/ttcache.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <new>
#include <string>

namespace sdmrg::ttcache {
namespace {

constexpr std::align_val_t kAlign{64};

}  // namespace

void Arena::Free::operator()(std::byte* p) const { ::operator delete[](p, kAlign); }

Arena::Arena(std::size_t capacity)
    : buffer_(static_cast<std::byte*>(::operator new[](std::max<std::size_t>(capacity, 1), kAlign))),
      capacity_(capacity) {}

Region Arena::load(std::size_t size, const Loader& loader) {
    if (size > capacity_ - offset_)
        throw CapacityExceeded("arena: load of " + std::to_string(size) + " bytes at offset " +
                               std::to_string(offset_) + " exceeds capacity " +
                               std::to_string(capacity_));
    const Region r{offset_, size};
    if (loader) loader(std::span<std::byte>(buffer_.get() + r.start, size));
    offset_ += size;
    live_.push_back(r);
    ++stats_.loads;
    stats_.bytes_copied += size;
    stats_.peak_offset = std::max(stats_.peak_offset, offset_);
    return r;
}

Region Arena::load(std::span<const std::byte> data) {
    return load(data.size(), [&](std::span<std::byte> dst) {
        std::memcpy(dst.data(), data.data(), data.size());
    });
}

void Arena::unload(const Region& r) {
    if (live_.empty() || !(live_.back() == r) || r.start + r.size != offset_)
        throw LifoViolation("arena: unload of region [" + std::to_string(r.start) + ", " +
                            std::to_string(r.start + r.size) + ") is not the most recent load");
    live_.pop_back();
    offset_ = r.start;
}

std::span<std::byte> Arena::bytes(const Region& r) { return {buffer_.get() + r.start, r.size}; }

std::span<const std::byte> Arena::bytes(const Region& r) const {
    return {buffer_.get() + r.start, r.size};
}

void visit(const DependencyNode& node, Arena& arena, std::vector<Region>& path) {
    const Region r = arena.load(node.payload_size, node.loader);
    path.push_back(r);
    try {
        const VisitContext ctx{arena, path, node};
        for (const auto& task : node.tasks) task(ctx);
        for (const auto& child : node.children) visit(child, arena, path);
    } catch (...) {
        path.pop_back();
        arena.unload(r);
        throw;
    }
    path.pop_back();
    arena.unload(r);
}

std::size_t plan_check(const DependencyNode& root) {
    std::size_t deepest = 0;
    for (const auto& c : root.children) deepest = std::max(deepest, plan_check(c));
    return root.payload_size + deepest;
}

TraversalStats ttcache_run(const DependencyNode& root, Arena& arena) {
    const std::size_t need = plan_check(root);
    if (need > arena.capacity() - arena.offset())
        throw CapacityExceeded("ttcache: tree needs " + std::to_string(need) + " bytes, arena has " +
                               std::to_string(arena.capacity() - arena.offset()) + " free");
    const std::size_t start = arena.offset();
    arena.reset_stats();
    std::vector<Region> path;
    visit(root, arena, path);
    TraversalStats walk = arena.stats();
    walk.peak_offset -= start;
    return walk;
}

std::size_t node_count(const DependencyNode& root) {
    std::size_t n = 1;
    for (const auto& c : root.children) n += node_count(c);
    return n;
}

namespace {

std::uint64_t naive_bytes(const DependencyNode& node, std::uint64_t above) {
    const std::uint64_t here = above + node.payload_size;
    std::uint64_t total = here;
    for (const auto& c : node.children) total += naive_bytes(c, here);
    return total;
}

}  // namespace

std::uint64_t naive_copy_bytes(const DependencyNode& root) { return naive_bytes(root, 0); }

void reorder(DependencyNode& root, const std::function<void(std::vector<DependencyNode>&)>& order) {
    order(root.children);
    for (auto& c : root.children) reorder(c, order);
}

TraversalStats run_forest(mazerunner::RunnerPool& pool, std::span<const DependencyNode> roots,
                          std::span<Arena> arenas) {
    if (arenas.size() < pool.workers())
        throw std::invalid_argument("run_forest: need one arena per worker");
    std::mutex m;
    TraversalStats total;
    mazerunner::RangeMaze maze(roots.size(), [&](std::size_t i, std::vector<mazerunner::Task>& out) {
        out.push_back({[&, i](mazerunner::TaskContext& ctx) {
                           const auto s = ttcache_run(roots[i], arenas[ctx.worker()]);
                           std::lock_guard lock(m);
                           total += s;
                       },
                       static_cast<double>(plan_check(roots[i])), 0});
    });
    const auto stats = pool.run_batch(maze);
    if (stats.failed > 0)
        throw std::runtime_error("run_forest: " +
                                 (stats.errors.empty() ? std::string("task failed") : stats.errors.front()));
    return total;
}

}  // namespace sdmrg::ttcache
