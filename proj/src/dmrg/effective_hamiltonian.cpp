#include "sdmrg/dmrg/effective_hamiltonian.hpp"

#include <algorithm>
#include <cstring>
#include <map>

#include "sdmrg/sbmm4s/sbmm4s.hpp"

namespace sdmrg {
namespace {

struct Member {
    const Matrix* l = nullptr;
    const Matrix* r = nullptr;
    double scale = 0.0;
};

}  // namespace

std::uint64_t HamiltonianPlan::flop_estimate() const {
    std::uint64_t f = 0;
    for (const auto& b : batches) f += sbmm4s::flop_count(b.m, b.n, b.q, b.r, b.p);
    return f;
}

HamiltonianPlan build_plan(const OperatorTable& table, const BlockState& left, const BlockState& right,
                           std::shared_ptr<const WaveLayout> layout) {
    if (!(left.basis == layout->left()) || !(right.basis == layout->right()))
        throw PlanError("build_plan: block bases do not match the wavefunction layout");
    const std::size_t d = static_cast<std::size_t>(layout->site().dim());
    const auto& blocks = layout->blocks();

    std::vector<std::vector<std::size_t>> by_sites(d * d);
    for (std::size_t i = 0; i < blocks.size(); ++i) by_sites[blocks[i].s1 * d + blocks[i].s2].push_back(i);

    std::map<std::pair<std::size_t, std::size_t>, std::vector<Member>> pairs;
    for (const auto& row : table.rows) {
        if (row.left >= left.ops.size() || row.right >= right.ops.size())
            throw PlanError("build_plan: operator-table row references a missing block operator");
        const SectorMatrix& lop = left.ops[row.left];
        const SectorMatrix& rop = right.ops[row.right];
        for (const auto& f : row.factors) {
            for (std::size_t in : by_sites[std::size_t{f.in1} * d + f.in2]) {
                const WaveBlock& wb = blocks[in];
                const QuantumNumber ql = layout->left()[wb.l].qn, qr = layout->right()[wb.r].qn;
                const Matrix* lm = lop.find_for_col(ql);
                const Matrix* rm = rop.find_for_col(qr);
                if (!lm || !rm) continue;
                const auto lo = layout->left().find(ql + lop.delta());
                const auto ro = layout->right().find(qr + rop.delta());
                if (!lo || !ro) throw PlanError("build_plan: operator block outside the block basis");
                const auto out = layout->find(*lo, f.out1, f.out2, *ro);
                if (!out) throw PlanError("build_plan: term leaves the target sector");
                pairs[{in, *out}].push_back({lm, rm, row.alpha * f.value});
            }
        }
    }

    HamiltonianPlan plan;
    plan.layout = layout;
    plan.by_input.resize(blocks.size());
    for (const auto& [key, members] : pairs) {
        const WaveBlock& bi = blocks[key.first];
        const WaveBlock& bo = blocks[key.second];
        HamiltonianBatch b;
        b.in_block = key.first;
        b.out_block = key.second;
        b.m = bi.rows;
        b.n = bi.cols;
        b.q = bo.rows;
        b.r = bo.cols;
        b.p = static_cast<Index>(members.size());
        b.left.resize(static_cast<std::size_t>(b.q * b.m * b.p));
        b.right.resize(static_cast<std::size_t>(b.r * b.n * b.p));
        for (Index i = 0; i < b.p; ++i) {
            const Member& mb = members[static_cast<std::size_t>(i)];
            double* dl = b.left.data() + i * b.q * b.m;
            const double* sl = mb.l->data();
            for (Index k = 0; k < b.q * b.m; ++k) dl[k] = mb.scale * sl[k];
            std::memcpy(b.right.data() + i * b.r * b.n, mb.r->data(),
                        static_cast<std::size_t>(b.r * b.n) * sizeof(double));
        }
        plan.max_workspace = std::max(plan.max_workspace, b.m * b.p * b.r);
        plan.by_input[b.in_block].push_back(plan.batches.size());
        plan.batches.push_back(std::move(b));
    }
    return plan;
}

EffectiveHamiltonian::EffectiveHamiltonian(const HamiltonianPlan& plan, mazerunner::RunnerPool* pool)
    : plan_(plan), pool_(pool) {
    const std::size_t workers = pool_ ? pool_->workers() : 1;
    workspaces_.assign(workers, std::vector<double>(static_cast<std::size_t>(plan_.max_workspace)));
    locks_ = std::make_unique<std::mutex[]>(plan_.layout->blocks().size());
}

void EffectiveHamiltonian::run_input(std::size_t in, std::span<const double> x, std::span<double> y,
                                     std::vector<double>& ws) {
    const auto& blocks = plan_.layout->blocks();
    const WaveBlock& bi = blocks[in];
    const ConstMatrixView a{x.data() + bi.offset, bi.rows, bi.cols, bi.rows};
    for (std::size_t k : plan_.by_input[in]) {
        const HamiltonianBatch& b = plan_.batches[k];
        const WaveBlock& bo = blocks[b.out_block];
        const auto right = sbmm4s::StridedStack::contiguous(b.right.data(), b.r, b.n, b.p);
        const auto left = sbmm4s::StridedStack::contiguous(b.left.data(), b.q, b.m, b.p);
        const MatrixView temp{ws.data(), b.m * b.p, b.r, b.m * b.p};
        sbmm4s::batched_gemm_interleaved(a, right, temp);
        std::lock_guard lock(locks_[b.out_block]);
        sbmm4s::concat_gemm_accumulate(left, temp, 1.0, {y.data() + bo.offset, bo.rows, bo.cols, bo.rows});
    }
}

void EffectiveHamiltonian::apply(std::span<const double> x, std::span<double> y) {
    const auto size = static_cast<std::size_t>(plan_.layout->size());
    if (x.size() != size || y.size() != size) throw PlanError("effective Hamiltonian: vector size mismatch");
    std::fill(y.begin(), y.end(), 0.0);
    ++applies_;
    const std::size_t n = plan_.by_input.size();
    if (!pool_) {
        for (std::size_t in = 0; in < n; ++in) run_input(in, x, y, workspaces_[0]);
        return;
    }
    mazerunner::RangeMaze maze(n, [&](std::size_t in, std::vector<mazerunner::Task>& found) {
        if (plan_.by_input[in].empty()) return;
        mazerunner::Task t;
        t.run = [this, in, x, y](mazerunner::TaskContext& ctx) { run_input(in, x, y, workspaces_[ctx.worker()]); };
        t.cost_hint = static_cast<double>(plan_.by_input[in].size());
        found.push_back(std::move(t));
    });
    const auto stats = pool_->run_batch(maze);
    if (stats.failed > 0)
        throw std::runtime_error("effective Hamiltonian: task failed: " +
                                 (stats.errors.empty() ? std::string("unknown") : stats.errors.front()));
}

}  // namespace sdmrg
