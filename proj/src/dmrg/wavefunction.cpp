#include "sdmrg/dmrg/wavefunction.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sdmrg {

WaveLayout::WaveLayout(SectorBasis left, LocalBasis site, SectorBasis right, QuantumNumber target)
    : left_(std::move(left)), site_(std::move(site)), right_(std::move(right)), target_(target) {
    const std::size_t d = static_cast<std::size_t>(site_.dim());
    lookup_.assign(left_.size() * d * d * right_.size(), -1);
    for (std::size_t l = 0; l < left_.size(); ++l)
        for (std::size_t s1 = 0; s1 < d; ++s1)
            for (std::size_t s2 = 0; s2 < d; ++s2) {
                const QuantumNumber need = target_ - left_[l].qn - site_.state_qn(static_cast<Index>(s1)) -
                                           site_.state_qn(static_cast<Index>(s2));
                const auto r = right_.find(need);
                if (!r) continue;
                lookup_[((l * d + s1) * d + s2) * right_.size() + *r] = static_cast<std::int64_t>(blocks_.size());
                blocks_.push_back({l, s1, s2, *r, left_[l].dim, right_[*r].dim, size_});
                size_ += left_[l].dim * right_[*r].dim;
            }
}

std::optional<std::size_t> WaveLayout::find(std::size_t l, std::size_t s1, std::size_t s2, std::size_t r) const {
    const std::size_t d = static_cast<std::size_t>(site_.dim());
    if (l >= left_.size() || s1 >= d || s2 >= d || r >= right_.size()) return std::nullopt;
    const std::int64_t i = lookup_[((l * d + s1) * d + s2) * right_.size() + r];
    if (i < 0) return std::nullopt;
    return static_cast<std::size_t>(i);
}

MatrixView Wavefunction::block(std::size_t i) {
    const auto& b = layout->blocks()[i];
    return {data.data() + b.offset, b.rows, b.cols, b.rows};
}

ConstMatrixView Wavefunction::block(std::size_t i) const {
    const auto& b = layout->blocks()[i];
    return {data.data() + b.offset, b.rows, b.cols, b.rows};
}

double Wavefunction::norm() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return std::sqrt(s);
}

void Wavefunction::normalize() {
    const double n = norm();
    if (!(n > 0.0)) throw std::runtime_error("wavefunction: cannot normalize a zero vector");
    for (double& v : data) v /= n;
}

Wavefunction random_wavefunction(std::shared_ptr<const WaveLayout> layout, std::uint64_t seed) {
    Wavefunction w(std::move(layout));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : w.data) v = u(rng);
    if (!w.data.empty()) w.normalize();
    return w;
}

}  // namespace sdmrg
