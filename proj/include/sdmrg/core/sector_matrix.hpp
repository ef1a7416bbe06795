#pragma once

#include <compare>
#include <map>

#include "sdmrg/core/matrix.hpp"
#include "sdmrg/core/sector_basis.hpp"

namespace sdmrg {

struct BlockKey {
    QuantumNumber row;
    QuantumNumber col;
    auto operator<=>(const BlockKey&) const = default;
};

class SelectionRuleError : public SectorError {
public:
    using SectorError::SectorError;
};

/// Quantum-number sector-sparse operator. Every stored block satisfies
/// row = col + delta; absent blocks are zero.
class SectorMatrix {
public:
    SectorMatrix() = default;
    SectorMatrix(SectorBasis rows, SectorBasis cols, QuantumNumber delta)
        : rows_(std::move(rows)), cols_(std::move(cols)), delta_(delta) {}

    static SectorMatrix identity(const SectorBasis& basis);

    const SectorBasis& row_basis() const { return rows_; }
    const SectorBasis& col_basis() const { return cols_; }
    const QuantumNumber& delta() const { return delta_; }

    const std::map<BlockKey, Matrix>& blocks() const { return blocks_; }
    std::size_t block_count() const { return blocks_.size(); }

    /// Block with column label `col` (row label col + delta), created as zeros
    /// on first access. Throws when either label is not in its basis.
    Matrix& block_for_col(const QuantumNumber& col);
    /// Same, keyed explicitly; throws SelectionRuleError if row != col + delta.
    Matrix& block(const BlockKey& key);
    void set_block(const BlockKey& key, Matrix value);

    const Matrix* find(const BlockKey& key) const;
    Matrix* find(const BlockKey& key);
    const Matrix* find_for_col(const QuantumNumber& col) const {
        return find({col + delta_, col});
    }

    void erase_zero_blocks(double tol = 0.0);
    void scale(double s);

    SectorMatrix transposed() const;

    /// Checks the selection rule and block shapes of every stored block.
    void validate() const;

    bool operator==(const SectorMatrix&) const = default;

private:
    SectorBasis rows_;
    SectorBasis cols_;
    QuantumNumber delta_;
    std::map<BlockKey, Matrix> blocks_;
};

}  // namespace sdmrg
