#include "sdmrg/core/hilbert.hpp"

#include <stdexcept>
#include <string>

namespace sdmrg {

BigInt hilbert_dimension(int modes, int particles) {
    if (modes < 0 || particles < 0 || particles > 2 * modes)
        throw std::out_of_range("hilbert_dimension: particle count " + std::to_string(particles) +
                                " outside [0, " + std::to_string(2 * modes) + "]");
    const int n = 2 * modes;
    const int k = std::min(particles, n - particles);
    BigInt result = 1;
    // Exact at every step: result holds C(n - k + i, i).
    for (int i = 1; i <= k; ++i) {
        result *= n - k + i;
        result /= i;
    }
    return result;
}

}  // namespace sdmrg
