#pragma once

#include <cstdint>
#include <vector>

#include "sdmrg/model/mpo.hpp"

// Dense reference constructions for small systems. The direct builder works on
// occupation bit strings (one bit per spin-orbital, lowest mode leftmost in
// the creation string) and never touches the factorized form.

namespace sdmrg::dense {

/// Product-basis labels: state x has site k in local state
/// (x / d^(N-1-k)) % d.
std::vector<QuantumNumber> state_labels(const Model& model);

/// Indices of the product states carrying `target`, ascending.
std::vector<std::int64_t> sector_states(const Model& model, QuantumNumber target);

/// <x_r| H |x_c> over the given product states, straight from the term list.
Matrix hamiltonian(const Model& model, const std::vector<std::int64_t>& states);
/// Full product space; throws ModelError above `guard` states.
Matrix hamiltonian(const Model& model, std::int64_t guard = 4096);

/// Contracts the MPO into the full dense Hamiltonian.
Matrix from_mpo(const Mpo& mpo, std::int64_t guard = 4096);
/// Assembles sum_rows alpha * L (x) X (x) R densely.
Matrix from_operator_table(const Mpo& mpo, const OperatorTable& table, std::int64_t guard = 4096);

/// Left-block operators at bond b (product of W_0..W_{b-1}), dense.
std::vector<Matrix> left_block(const Mpo& mpo, int b);
/// Right-block operators at bond b (product of W_b..W_{N-1}), dense.
std::vector<Matrix> right_block(const Mpo& mpo, int b);

Matrix kron(const Matrix& a, const Matrix& b);

/// Ascending eigenvalues of a symmetric matrix.
std::vector<double> eigenvalues(const Matrix& h);
/// Lowest eigenpair of a symmetric matrix.
std::pair<double, std::vector<double>> ground_state(const Matrix& h);

}  // namespace sdmrg::dense
