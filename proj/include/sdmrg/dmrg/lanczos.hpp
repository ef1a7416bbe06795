#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace sdmrg {

class LanczosError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// y = H x for a symmetric H.
using ApplyFn = std::function<void(std::span<const double> x, std::span<double> y)>;

struct LanczosOptions {
    double tol = 1e-10;       // on ||H v - E v|| / (1 + |E|)
    int max_iter = 300;       // Lanczos steps over all restarts
    int krylov_max = 40;      // basis size before a restart from the Ritz vector
    std::uint64_t seed = 0;
    // Weight of a seeded random unit vector mixed into the normalized guess.
    // A guess orthogonal to the ground state would otherwise only pick up
    // rounding-level overlap, too little to surface before a competing Ritz
    // value converges.
    double mix = 1e-3;
};

struct LanczosResult {
    double energy = 0.0;
    std::vector<double> vector;  // normalized
    int iterations = 0;          // Lanczos steps
    int applies = 0;             // calls of the operator, residual checks included
    bool converged = false;
    double residual = 0.0;       // ||H v - E v||
};

/// Lowest eigenpair with full reorthogonalization of the Krylov basis.
/// Throws LanczosError for an empty or zero guess. When max_iter runs out the
/// best estimate is returned with converged == false.
LanczosResult lanczos_ground(const ApplyFn& apply, std::span<const double> guess,
                             const LanczosOptions& opts = {});

}  // namespace sdmrg
