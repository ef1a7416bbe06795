#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdmrg/core/matrix.hpp"
#include "sdmrg/core/sector_basis.hpp"
#include "sdmrg/core/sector_matrix.hpp"
#include "sdmrg/model/integrals.hpp"

namespace sdmrg {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ModelKind { heisenberg_chain, hubbard_chain, integral_file };

struct ModelParams {
    ModelKind kind = ModelKind::heisenberg_chain;
    int n = 0;
    double j = 1.0;
    double t = 1.0;
    double u = 0.0;
    std::string path;  // integral_file only

    void validate() const;
};

/// Elementary operators acting on one site. Fermionic sites are spatial
/// orbitals with the two spin-orbitals ordered up before down.
enum class SiteOp : std::uint8_t { cdag_up, cdag_dn, c_up, c_dn, sz, splus, sminus };

bool is_fermionic(SiteOp op);
const char* name_of(SiteOp op);

enum class SiteKind { spin_half, fermion };

/// One-dimensional sectors per state; state i is sector i of `sectors`.
///   spin_half: (0,-1) down, (0,+1) up
///   fermion:   (0,0) empty, (1,-1) down, (1,+1) up, (2,0) up-down
/// with |up-down> = c+_up c+_dn |0>.
struct LocalBasis {
    SiteKind kind = SiteKind::spin_half;
    SectorBasis sectors;

    static LocalBasis spin_half();
    static LocalBasis fermion();

    Index dim() const { return sectors.total_dimension(); }
    QuantumNumber state_qn(Index i) const { return sectors[static_cast<std::size_t>(i)].qn; }
    Matrix matrix(SiteOp op) const;
    QuantumNumber delta(SiteOp op) const;
    /// Fermion parity (-1)^n on the site; identity for spins.
    Matrix parity() const;
    bool operator==(const LocalBasis&) const = default;
};

/// Dense d x d site operator as a sector-sparse matrix with 1x1 blocks.
SectorMatrix site_operator(const LocalBasis& basis, const Matrix& m, QuantumNumber delta);

struct OpFactor {
    int site = 0;
    SiteOp op = SiteOp::sz;
    auto operator<=>(const OpFactor&) const = default;
};

/// coefficient * ops[0] ops[1] ... (ops[0] applied last).
struct Term {
    double coefficient = 0.0;
    std::vector<OpFactor> ops;
};

struct Model {
    ModelKind kind = ModelKind::heisenberg_chain;
    int n_sites = 0;
    LocalBasis site;
    std::optional<Integrals> integrals;  // fermionic models
    double j = 0.0;                      // heisenberg
    std::vector<Term> terms;

    /// Half filling with the smallest non-negative 2Sz.
    QuantumNumber default_target() const;
    /// Number of states of the full product space.
    double hilbert_size() const;
};

Model heisenberg_chain(int n, double j);
Integrals hubbard_integrals(int n, double t, double u);
Model fermion_model(Integrals ints, ModelKind kind = ModelKind::integral_file);
Model build_model(const ModelParams& params);

}  // namespace sdmrg
