#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sdmrg/core/sector_matrix.hpp"

// Four-level hierarchy for sector algebra:
//   1. sector_table   - which output sector pairs can appear
//   2. task_table     - every (input block, input block) -> output block task
//   3. execute_tasks  - perform the tasks
//   4. full_form_check - redo the operation on dense matrices and compare

namespace sdmrg {

enum class OpKind { multiply, kron, add };

struct OperandOptions {
    bool transpose_a = false;  // multiply only
    bool transpose_b = false;  // multiply only
    double weight = 1.0;
};

/// Structure of an operand without data: bases, delta and stored block keys.
struct SectorStructure {
    SectorBasis rows;
    SectorBasis cols;
    QuantumNumber delta;
    std::vector<BlockKey> keys;

    static SectorStructure of(const SectorMatrix& m);
    /// All blocks permitted by the selection rule (a dense-filled operand).
    static SectorStructure full(SectorBasis rows, SectorBasis cols, QuantumNumber delta);
};

struct SectorTable {
    OpKind kind = OpKind::multiply;
    SectorBasis rows;
    SectorBasis cols;
    QuantumNumber delta;
    std::vector<BlockKey> outputs;  // sorted, unique
};

struct TaskRow {
    std::optional<BlockKey> a;  // key as stored in operand a
    std::optional<BlockKey> b;  // key as stored in operand b
    BlockKey out;
    double weight = 1.0;
    bool transpose_a = false;
    bool transpose_b = false;
    Index row_offset = 0;  // kron: placement inside the fused output block
    Index col_offset = 0;
};

struct TaskTable {
    OpKind kind = OpKind::multiply;
    SectorBasis rows;
    SectorBasis cols;
    QuantumNumber delta;
    std::vector<TaskRow> tasks;  // sorted by output key
};

SectorTable sector_table(const SectorStructure& a, const SectorStructure& b, OpKind kind,
                         const OperandOptions& opts = {});

TaskTable task_table(const SectorMatrix& a, const SectorMatrix& b, OpKind kind,
                     const OperandOptions& opts = {});

/// Output operator with zero blocks for every output key of the table, so that
/// execute_tasks may then run concurrently on disjoint output keys.
SectorMatrix make_accumulator(const TaskTable& table);

/// out += sum over rows of weight * (a-block o b-block). Missing output blocks are
/// created, which is only safe single-threaded; use make_accumulator otherwise.
void execute_tasks(const TaskTable& table, const SectorMatrix& a, const SectorMatrix& b,
                   SectorMatrix& out);
/// Executes the selected rows only, in the given order.
void execute_rows(const TaskTable& table, std::span<const std::size_t> rows,
                  const SectorMatrix& a, const SectorMatrix& b, SectorMatrix& out);

SectorMatrix multiply(const SectorMatrix& a, const SectorMatrix& b, const OperandOptions& opts = {});
SectorMatrix kron(const SectorMatrix& a, const SectorMatrix& b, double weight = 1.0);
SectorMatrix add(const SectorMatrix& a, const SectorMatrix& b, double weight = 1.0);

class DensifyGuardError : public SectorError {
public:
    using SectorError::SectorError;
};

inline constexpr Index kDensifyGuard = 4096;

/// Dense assembly in basis order (sector offsets, then in-block index).
Matrix densify(const SectorMatrix& op, Index guard = kDensifyGuard);

struct FullFormCheck {
    Matrix dense;
    double max_abs_deviation = 0.0;
};

/// Level 4 for a stand-alone operator: dense form, deviation 0.
FullFormCheck full_form_check(const SectorMatrix& op);
/// Level 4 for an operation result: recompute `table`'s operation on dense
/// operands and report the max elementwise deviation from `result`.
FullFormCheck full_form_check(const TaskTable& table, const SectorMatrix& a, const SectorMatrix& b,
                              const SectorMatrix& result);

/// Dense row/column permutation taking the fused ordering of a (x) b to the plain
/// Kronecker ordering (a index slowest): plain[i] = fused[perm[i]].
std::vector<Index> kron_permutation(const SectorBasis& a, const SectorBasis& b);

}  // namespace sdmrg
