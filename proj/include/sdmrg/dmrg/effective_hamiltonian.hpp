#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "sdmrg/dmrg/block.hpp"
#include "sdmrg/dmrg/wavefunction.hpp"
#include "sdmrg/mazerunner/mazerunner.hpp"
#include "sdmrg/model/mpo.hpp"

namespace sdmrg {

class PlanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One sbmm4s call: out_block += sum_i L_i * in_block * R_i^T. The left stack
/// already carries alpha times the scalar site factor of each member.
struct HamiltonianBatch {
    std::size_t in_block = 0;
    std::size_t out_block = 0;
    Index m = 0, n = 0, q = 0, r = 0, p = 0;
    std::vector<double> left;   // q x m x p, contiguous
    std::vector<double> right;  // r x n x p, contiguous
};

struct HamiltonianPlan {
    std::shared_ptr<const WaveLayout> layout;
    std::vector<HamiltonianBatch> batches;          // grouped by in_block, then out_block
    std::vector<std::vector<std::size_t>> by_input;  // batch indices per input block
    Index max_workspace = 0;                        // doubles, largest m * p * r

    /// Kernel FLOPs of one application.
    std::uint64_t flop_estimate() const;
};

/// Resolves every operator-table row against the blocks: L from `left`
/// (bond n_left), R from `right` (bond n_left + 2).
HamiltonianPlan build_plan(const OperatorTable& table, const BlockState& left, const BlockState& right,
                           std::shared_ptr<const WaveLayout> layout);

/// Applies a plan, serially or through a worker pool. Not reentrant: one
/// apply at a time per instance.
class EffectiveHamiltonian {
public:
    EffectiveHamiltonian(const HamiltonianPlan& plan, mazerunner::RunnerPool* pool);

    void apply(std::span<const double> x, std::span<double> y);
    std::uint64_t applies() const { return applies_; }

private:
    void run_input(std::size_t in, std::span<const double> x, std::span<double> y, std::vector<double>& ws);

    const HamiltonianPlan& plan_;
    mazerunner::RunnerPool* pool_;
    std::vector<std::vector<double>> workspaces_;
    std::unique_ptr<std::mutex[]> locks_;  // one per output block
    std::uint64_t applies_ = 0;
};

}  // namespace sdmrg
