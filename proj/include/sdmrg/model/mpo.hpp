#pragma once

#include <cstdint>
#include <vector>

#include "sdmrg/model/model.hpp"

// Hamiltonian factorization along the site chain.
//
// Every term is written in site order as a product of per-site groups. At a
// bond b a term is represented by a block operator keyed either by its groups
// left of b (coefficient not applied yet) or by its groups right of b
// (coefficient already applied, the left part summed into one complementary
// operator). The key sits on the side holding fewer groups, ties go to the
// smaller block and then to the left block. Terms sharing a key share the
// block operator, which is the partial summation that keeps the number of
// operators per bond quadratic in N for two-body Hamiltonians.
//
// Jordan-Wigner strings are folded into the site matrices: a site carries the
// parity operator when an odd number of fermionic operators acts further right.

namespace sdmrg {

struct OpGroup {
    int site = 0;
    std::vector<SiteOp> ops;  // product in this order
    auto operator<=>(const OpGroup&) const = default;
};

/// A term reordered into ascending site order, same-site operators grouped.
struct CanonicalTerm {
    double coefficient = 0.0;
    std::vector<OpGroup> groups;
};

/// Site-orders every term (fermionic reordering signs included), merges
/// identical operator strings and drops terms that vanish identically. Throws
/// ModelError for terms that break particle number, 2Sz or fermion parity.
std::vector<CanonicalTerm> canonical_terms(const Model& model);

struct BondState {
    bool right_keyed = false;
    bool empty_key = false;  // left-keyed empty: identity; right-keyed empty: finished terms
    QuantumNumber delta;     // quantum-number change of the left-block operator
};

/// Matrix-valued entry W_b[from, to] of site b, acting on the site basis.
struct Transition {
    std::size_t from = 0;
    std::size_t to = 0;
    Matrix op;
    QuantumNumber delta;
};

struct Mpo {
    int n_sites = 0;
    LocalBasis site;
    std::vector<std::vector<BondState>> bonds;    // n_sites + 1 bonds
    std::vector<std::vector<Transition>> sites;   // n_sites sites

    std::size_t bond_dimension(int b) const { return bonds[static_cast<std::size_t>(b)].size(); }
    /// Stable 64-bit hash of the full structure and values.
    std::uint64_t fingerprint() const;
};

Mpo build_mpo(const Model& model);

/// Number of distinct block operators crossing `boundary` (0..N); the bond
/// dimension build_mpo would produce there, computed without building it.
std::size_t auxiliary_count(const Model& model, int boundary);

/// Two-site split: sites [0, n_left) | n_left | n_left + 1 | the rest.
struct Partition {
    int n_left = 0;
    int n_right = 0;
    int site() const { return n_left; }
};

class PartitionError : public ModelError {
public:
    using ModelError::ModelError;
};

/// Scalar entry of the two-site operator: <out1 out2| X |in1 in2>.
struct SiteFactor {
    std::uint8_t out1 = 0, out2 = 0, in1 = 0, in2 = 0;
    double value = 0.0;
};

/// H = sum_rows alpha * L[left] (x) X_row (x) R[right], with L the left-block
/// operators at bond n_left and R the right-block operators at bond n_left + 2.
struct OperatorTableRow {
    std::size_t left = 0;
    std::size_t right = 0;
    double alpha = 1.0;
    std::vector<SiteFactor> factors;
};

struct OperatorTable {
    Partition partition;
    std::vector<OperatorTableRow> rows;  // sorted by (left, right)
};

OperatorTable factorize(const Mpo& mpo, Partition partition);

}  // namespace sdmrg
