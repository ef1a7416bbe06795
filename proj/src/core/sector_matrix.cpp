#include "sdmrg/core/sector_matrix.hpp"

#include <cmath>

namespace sdmrg {

SectorMatrix SectorMatrix::identity(const SectorBasis& basis) {
    SectorMatrix m(basis, basis, QuantumNumber{});
    for (const auto& e : basis.entries()) m.set_block({e.qn, e.qn}, Matrix::identity(e.dim));
    return m;
}

Matrix& SectorMatrix::block_for_col(const QuantumNumber& col) {
    return block({col + delta_, col});
}

Matrix& SectorMatrix::block(const BlockKey& key) {
    if (auto it = blocks_.find(key); it != blocks_.end()) return it->second;
    if (key.row != key.col + delta_)
        throw SelectionRuleError("block " + key.row.str() + "<-" + key.col.str() +
                                 " violates delta " + delta_.str());
    const Index r = rows_.dim(key.row), c = cols_.dim(key.col);
    if (r == 0 || c == 0)
        throw SectorError("block " + key.row.str() + "<-" + key.col.str() +
                          " not present in the operator bases");
    return blocks_.emplace(key, Matrix(r, c)).first->second;
}

void SectorMatrix::set_block(const BlockKey& key, Matrix value) {
    Matrix& b = block(key);
    if (b.rows() != value.rows() || b.cols() != value.cols())
        throw SectorError("set_block: block " + key.row.str() + "<-" + key.col.str() +
                          " has wrong shape");
    b = std::move(value);
}

const Matrix* SectorMatrix::find(const BlockKey& key) const {
    auto it = blocks_.find(key);
    return it == blocks_.end() ? nullptr : &it->second;
}

Matrix* SectorMatrix::find(const BlockKey& key) {
    auto it = blocks_.find(key);
    return it == blocks_.end() ? nullptr : &it->second;
}

void SectorMatrix::erase_zero_blocks(double tol) {
    std::erase_if(blocks_, [tol](const auto& kv) { return kv.second.max_abs() <= tol; });
}

void SectorMatrix::scale(double s) {
    for (auto& [k, b] : blocks_)
        for (double& v : b.values()) v *= s;
}

SectorMatrix SectorMatrix::transposed() const {
    SectorMatrix t(cols_, rows_, -delta_);
    for (const auto& [k, b] : blocks_) t.blocks_.emplace(BlockKey{k.col, k.row}, b.transposed());
    return t;
}

void SectorMatrix::validate() const {
    for (const auto& [k, b] : blocks_) {
        if (k.row != k.col + delta_)
            throw SelectionRuleError("stored block " + k.row.str() + "<-" + k.col.str() +
                                     " violates delta " + delta_.str());
        if (b.rows() != rows_.dim(k.row) || b.cols() != cols_.dim(k.col))
            throw SectorError("stored block " + k.row.str() + "<-" + k.col.str() +
                              " has shape inconsistent with the bases");
    }
}

}  // namespace sdmrg
