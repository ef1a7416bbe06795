#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>

namespace sdmrg {

/// Abelian U(1) label: (particle number N, twice the z-spin 2Sz).
/// Spin chains leave the particle component at zero.
struct QuantumNumber {
    static constexpr std::size_t kComponents = 2;
    std::array<std::int32_t, kComponents> c{0, 0};

    constexpr QuantumNumber() = default;
    constexpr explicit QuantumNumber(std::int32_t n) : c{n, 0} {}
    constexpr QuantumNumber(std::int32_t n, std::int32_t two_sz) : c{n, two_sz} {}

    constexpr std::int32_t particles() const { return c[0]; }
    constexpr std::int32_t two_sz() const { return c[1]; }

    constexpr QuantumNumber operator+(const QuantumNumber& o) const {
        return {c[0] + o.c[0], c[1] + o.c[1]};
    }
    constexpr QuantumNumber operator-(const QuantumNumber& o) const {
        return {c[0] - o.c[0], c[1] - o.c[1]};
    }
    constexpr QuantumNumber operator-() const { return {-c[0], -c[1]}; }
    QuantumNumber& operator+=(const QuantumNumber& o) {
        c[0] += o.c[0];
        c[1] += o.c[1];
        return *this;
    }

    constexpr auto operator<=>(const QuantumNumber&) const = default;

    std::string str() const {
        return "(" + std::to_string(c[0]) + "," + std::to_string(c[1]) + ")";
    }
};

inline std::ostream& operator<<(std::ostream& os, const QuantumNumber& q) { return os << q.str(); }

struct QuantumNumberHash {
    std::size_t operator()(const QuantumNumber& q) const noexcept {
        return std::hash<std::int64_t>{}((static_cast<std::int64_t>(q.c[0]) << 32) ^
                                         static_cast<std::uint32_t>(q.c[1]));
    }
};

}  // namespace sdmrg
