#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sdmrg/core/matrix.hpp"
#include "sdmrg/core/quantum_number.hpp"

namespace sdmrg {

class SectorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BasisMismatch : public SectorError {
public:
    using SectorError::SectorError;
};

struct SectorEntry {
    QuantumNumber qn;
    Index dim = 0;
    Index offset = 0;  // position of the sector in the dense (densified) ordering

    bool operator==(const SectorEntry&) const = default;
};

/// Sorted list of (quantum number, dimension) pairs with unique labels.
class SectorBasis {
public:
    SectorBasis() = default;
    /// Sorts by quantum number; rejects duplicate labels and non-positive dimensions.
    explicit SectorBasis(std::vector<std::pair<QuantumNumber, Index>> sectors);

    std::span<const SectorEntry> entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const SectorEntry& operator[](std::size_t i) const { return entries_[i]; }
    Index total_dimension() const { return total_; }

    std::optional<std::size_t> find(const QuantumNumber& q) const;
    bool contains(const QuantumNumber& q) const { return find(q).has_value(); }
    /// Dimension of sector q, or 0 when q is absent.
    Index dim(const QuantumNumber& q) const;

    bool operator==(const SectorBasis& o) const { return entries_ == o.entries_; }

private:
    std::vector<SectorEntry> entries_;
    Index total_ = 0;
};

/// Tensor-product basis a (x) b regrouped by fused quantum number. Inside an
/// output sector the (a-sector, b-sector) parts are laid out in lexicographic
/// order of (qa, qb); within a part, element (ia, ib) sits at ia * dim_b + ib.
struct FusedBasis {
    struct Part {
        std::size_t a_sector = 0;
        std::size_t b_sector = 0;
        Index offset = 0;  // inside the fused sector
        Index a_dim = 0;
        Index b_dim = 0;
    };

    SectorBasis basis;
    std::vector<std::vector<Part>> parts;  // indexed like basis.entries()

    /// Fused sector index and in-sector offset of the (a_sector, b_sector) part.
    std::pair<std::size_t, Index> locate(std::size_t a_sector, std::size_t b_sector) const;

private:
    friend FusedBasis fuse(const SectorBasis& a, const SectorBasis& b);
    std::vector<std::pair<std::size_t, Index>> lookup_;  // a_sector * nb + b_sector
    std::size_t nb_ = 0;
};

FusedBasis fuse(const SectorBasis& a, const SectorBasis& b);

}  // namespace sdmrg
