#pragma once

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdmrg/core/matrix.hpp"

// Integral file format (UTF-8 text, whitespace separated, 1-based indices):
//
//     N <modes>
//     T i j value          one-body  T_ij
//     V i j k l value      two-body  V_ijkl
//     E0 value             core energy (optional)
//
// `#` starts a comment. Lines without a label are also accepted with a numeric
// type tag in front: `1 i j value`, `2 i j k l value`, `0 value`; a bare
// integer is accepted as the header. Duplicate entries are summed. A T entry
// with its transpose missing is mirrored; if both are present they must agree
// within 1e-12.
//
// The Hamiltonian these integrals describe is
//
//     H = E0 + sum_{ij,s} T_ij c+_is c_js
//            + sum_{ijkl} V_ijkl sum_{s,t} c+_is c+_jt c_kt c_ls
//
// over spatial orbitals i (s, t are spin labels). V is used as given: there is
// no implicit factor 1/2 and no permutational symmetry is assumed.

namespace sdmrg {

class IntegralsError : public std::runtime_error {
public:
    IntegralsError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct TwoBodyEntry {
    std::array<int, 4> idx{};  // 0-based i, j, k, l
    double value = 0.0;
    bool operator==(const TwoBodyEntry&) const = default;
};

struct Integrals {
    int n_modes = 0;
    Matrix one_body;                 // n x n, symmetric
    std::vector<TwoBodyEntry> two_body;  // sorted by index, unique
    double core_energy = 0.0;

    explicit Integrals(int n = 0) : n_modes(n), one_body(n, n) {}

    /// Adds to V_ijkl (0-based), merging with an existing entry.
    void add_two_body(int i, int j, int k, int l, double v);
    /// Sorts, merges duplicates and drops exact zeros.
    void normalize();
    /// Throws IntegralsError on asymmetric T, bad indices or non-finite values.
    void validate() const;

    bool operator==(const Integrals&) const = default;
};

Integrals parse_integrals(std::istream& in);
Integrals load_integrals(const std::string& path);
/// Writes every value with 17 significant digits so that reloading is exact.
void write_integrals(const Integrals& ints, std::ostream& out);
void save_integrals(const Integrals& ints, const std::string& path);

}  // namespace sdmrg
