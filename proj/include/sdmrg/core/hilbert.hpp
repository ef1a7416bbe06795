#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace sdmrg {

using BigInt = boost::multiprecision::cpp_int;

/// Number of particle-conserving configurations of `particles` electrons over
/// 2*modes spin-orbitals: C(2*modes, particles). Throws std::out_of_range when
/// particles is outside [0, 2*modes].
BigInt hilbert_dimension(int modes, int particles);

}  // namespace sdmrg
