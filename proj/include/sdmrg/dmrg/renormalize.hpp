#pragma once

#include <cstdint>
#include <vector>

#include "sdmrg/dmrg/block.hpp"
#include "sdmrg/dmrg/wavefunction.hpp"
#include "sdmrg/mazerunner/mazerunner.hpp"
#include "sdmrg/ttcache/ttcache.hpp"

namespace sdmrg {

/// Eigenpairs of one diagonal block of a symmetric sector operator, ordered
/// by eigenvalue (descending or ascending as requested).
struct SectorEigen {
    QuantumNumber qn;
    std::vector<double> values;
    Matrix vectors;  // columns follow `values`
};

std::vector<SectorEigen> sector_eigen(const SectorMatrix& op, bool descending);

/// Basis of the first kept[i] eigenvectors of every sector, and the transform
/// (rows: op basis, cols: new basis) holding them. Sectors with nothing kept
/// are dropped.
struct Truncation {
    SectorBasis basis;
    SectorMatrix transform;
};

Truncation truncate(const SectorBasis& enlarged, const std::vector<SectorEigen>& eig,
                    const std::vector<Index>& kept);

/// Reduced density matrix of the enlarged left block (sites [0, n_left + 1))
/// or enlarged right block, built sector by sector with GEMMs.
SectorMatrix reduced_density_matrix(const Wavefunction& psi, Side side, std::uint64_t* flops = nullptr);

/// Global top-D selection over all sectors. Ties go to the smaller sector
/// label, then to the lower in-sector rank.
struct Selection {
    Truncation truncation;
    std::vector<double> spectrum;  // every eigenvalue, descending
    double truncation_error = 0.0;  // 1 - kept weight, clamped to [0, 1]
};

Selection select_states(const SectorMatrix& rdm, std::size_t max_states);

struct TransformStats {
    std::uint64_t flops = 0;
    ttcache::TraversalStats traversal;
};

/// U^T O U for every operator, one task per (operator, block). Each column
/// sector of U roots a dependency tree: U_Q, then U_Q' per row sector, then
/// the operator blocks. arena_bytes == 0 sizes the arenas from the plan;
/// otherwise a tree that does not fit throws ttcache::CapacityExceeded.
std::vector<SectorMatrix> transform_operators(const std::vector<SectorMatrix>& ops, const Truncation& t,
                                              mazerunner::RunnerPool* pool, std::size_t arena_bytes,
                                              TransformStats* stats = nullptr);

struct RenormalizeResult {
    BlockState block;
    Selection selection;
    std::uint64_t flops = 0;  // density matrix and operator transforms
};

/// Truncates the enlarged left block (side == left, `block` is the current
/// left block) or the enlarged right block of psi to at most max_states.
RenormalizeResult renormalize(const Wavefunction& psi, Side side, const BlockState& block, const Mpo& mpo,
                              std::size_t max_states, mazerunner::RunnerPool* pool, std::size_t arena_bytes);

/// Guess for the partition one step to the right: psi expressed with the new
/// left block `left_new` (transform from the enlarged old left block) and the
/// right block `right_next` one bond further, using the stored transform of
/// `right_old` = psi's right block.
Wavefunction predict_after_left(const Wavefunction& psi, const BlockState& left_new, const BlockState& right_old,
                                const BlockState& right_next, std::uint64_t* flops = nullptr);

/// Mirror image for a step to the left: `right_new` was just renormalized,
/// `left_old` is psi's left block and `left_prev` the block one bond shorter.
Wavefunction predict_after_right(const Wavefunction& psi, const BlockState& right_new, const BlockState& left_old,
                                 const BlockState& left_prev, std::uint64_t* flops = nullptr);

}  // namespace sdmrg
