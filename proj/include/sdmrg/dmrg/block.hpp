#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "sdmrg/core/sector_matrix.hpp"
#include "sdmrg/model/mpo.hpp"

namespace sdmrg {

enum class Side : std::uint8_t { left = 0, right = 1 };

/// Renormalized block: sites [0, bond) on the left side, [bond, N) on the
/// right side. ops[a] is the block operator of MPO bond state a at `bond`.
struct BlockState {
    Side side = Side::left;
    int bond = 0;
    SectorBasis basis;
    std::vector<SectorMatrix> ops;
    // enlarged basis -> basis; rows follow fuse(previous, site) on the left and
    // fuse(site, previous) on the right. Empty for the vacuum blocks.
    SectorMatrix transform;
    bool has_transform = false;

    bool operator==(const BlockState&) const = default;
};

BlockState vacuum_left(const Mpo& mpo);
BlockState vacuum_right(const Mpo& mpo);

/// Block plus one site, before truncation.
struct EnlargedBlock {
    Side side = Side::left;
    int bond = 0;      // bond of the enlarged block
    FusedBasis fused;  // left: fuse(block, site); right: fuse(site, block)
    std::vector<SectorMatrix> ops;
};

/// Left blocks absorb site `bond`, right blocks absorb site `bond - 1`.
EnlargedBlock enlarge(const BlockState& block, const Mpo& mpo);

/// Total quantum numbers reachable by `sites` sites.
std::set<QuantumNumber> reachable(const LocalBasis& site, int sites);

}  // namespace sdmrg
