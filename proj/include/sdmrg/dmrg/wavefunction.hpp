#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "sdmrg/core/sector_basis.hpp"
#include "sdmrg/model/model.hpp"

namespace sdmrg {

/// Dense block of the two-site wavefunction: left sector l, site states s1 and
/// s2, right sector r. Stored column-major (rows: left states, cols: right
/// states) at `offset` in the flat coefficient vector.
struct WaveBlock {
    std::size_t l = 0, s1 = 0, s2 = 0, r = 0;
    Index rows = 0, cols = 0, offset = 0;
};

/// Every (l, s1, s2, r) combination that fuses to the target, in
/// lexicographic order.
class WaveLayout {
public:
    WaveLayout(SectorBasis left, LocalBasis site, SectorBasis right, QuantumNumber target);

    const SectorBasis& left() const { return left_; }
    const SectorBasis& right() const { return right_; }
    const LocalBasis& site() const { return site_; }
    QuantumNumber target() const { return target_; }
    const std::vector<WaveBlock>& blocks() const { return blocks_; }
    Index size() const { return size_; }
    std::optional<std::size_t> find(std::size_t l, std::size_t s1, std::size_t s2, std::size_t r) const;

private:
    SectorBasis left_;
    LocalBasis site_;
    SectorBasis right_;
    QuantumNumber target_;
    std::vector<WaveBlock> blocks_;
    std::vector<std::int64_t> lookup_;  // ((l * d + s1) * d + s2) * nr + r -> block or -1
    Index size_ = 0;
};

struct Wavefunction {
    std::shared_ptr<const WaveLayout> layout;
    std::vector<double> data;

    explicit Wavefunction(std::shared_ptr<const WaveLayout> l)
        : layout(std::move(l)), data(static_cast<std::size_t>(layout->size()), 0.0) {}

    MatrixView block(std::size_t i);
    ConstMatrixView block(std::size_t i) const;
    double norm() const;
    void normalize();
};

/// Uniform random coefficients from a generator seeded with `seed`.
Wavefunction random_wavefunction(std::shared_ptr<const WaveLayout> layout, std::uint64_t seed);

}  // namespace sdmrg
