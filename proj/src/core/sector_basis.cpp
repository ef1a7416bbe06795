#include "sdmrg/core/sector_basis.hpp"

#include <algorithm>
#include <map>

namespace sdmrg {

SectorBasis::SectorBasis(std::vector<std::pair<QuantumNumber, Index>> sectors) {
    std::sort(sectors.begin(), sectors.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    entries_.reserve(sectors.size());
    for (const auto& [q, d] : sectors) {
        if (d <= 0) throw SectorError("SectorBasis: sector " + q.str() + " has dimension " +
                                      std::to_string(d));
        if (!entries_.empty() && entries_.back().qn == q)
            throw SectorError("SectorBasis: duplicate sector " + q.str());
        entries_.push_back({q, d, total_});
        total_ += d;
    }
}

std::optional<std::size_t> SectorBasis::find(const QuantumNumber& q) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), q,
                               [](const SectorEntry& e, const QuantumNumber& k) { return e.qn < k; });
    if (it == entries_.end() || it->qn != q) return std::nullopt;
    return static_cast<std::size_t>(it - entries_.begin());
}

Index SectorBasis::dim(const QuantumNumber& q) const {
    auto i = find(q);
    return i ? entries_[*i].dim : 0;
}

std::pair<std::size_t, Index> FusedBasis::locate(std::size_t a_sector, std::size_t b_sector) const {
    return lookup_.at(a_sector * nb_ + b_sector);
}

FusedBasis fuse(const SectorBasis& a, const SectorBasis& b) {
    std::map<QuantumNumber, std::vector<FusedBasis::Part>> grouped;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            grouped[a[i].qn + b[j].qn].push_back({i, j, 0, a[i].dim, b[j].dim});

    std::vector<std::pair<QuantumNumber, Index>> sectors;
    FusedBasis out;
    out.nb_ = b.size();
    out.lookup_.resize(a.size() * b.size());
    for (auto& [q, parts] : grouped) {
        // a-sectors are visited in sorted order, so parts are already (qa, qb)-ordered.
        Index off = 0;
        for (auto& p : parts) {
            p.offset = off;
            off += p.a_dim * p.b_dim;
        }
        sectors.emplace_back(q, off);
    }
    out.basis = SectorBasis(sectors);
    out.parts.resize(out.basis.size());
    std::size_t s = 0;
    for (auto& [q, parts] : grouped) {
        for (const auto& p : parts) out.lookup_[p.a_sector * out.nb_ + p.b_sector] = {s, p.offset};
        out.parts[s++] = std::move(parts);
    }
    return out;
}

}  // namespace sdmrg
