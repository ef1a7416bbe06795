#include "sdmrg/dmrg/block.hpp"

namespace sdmrg {
namespace {

struct SiteEntry {
    std::size_t out = 0, in = 0;
    double value = 0.0;
};

std::vector<SiteEntry> entries(const Matrix& m) {
    std::vector<SiteEntry> out;
    for (Index c = 0; c < m.cols(); ++c)
        for (Index r = 0; r < m.rows(); ++r)
            if (m(r, c) != 0.0) out.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), m(r, c)});
    return out;
}

BlockState vacuum(const Mpo& mpo, Side side) {
    BlockState b;
    b.side = side;
    b.bond = side == Side::left ? 0 : mpo.n_sites;
    b.basis = SectorBasis({{QuantumNumber{}, 1}});
    const auto& states = mpo.bonds[static_cast<std::size_t>(b.bond)];
    for (const auto& s : states) {
        if (!s.empty_key) throw ModelError("vacuum block: boundary bond carries a non-trivial operator");
        b.ops.push_back(SectorMatrix::identity(b.basis));
    }
    return b;
}

}  // namespace

BlockState vacuum_left(const Mpo& mpo) { return vacuum(mpo, Side::left); }
BlockState vacuum_right(const Mpo& mpo) { return vacuum(mpo, Side::right); }

EnlargedBlock enlarge(const BlockState& block, const Mpo& mpo) {
    const SectorBasis& site = mpo.site.sectors;
    EnlargedBlock e;
    e.side = block.side;
    if (block.side == Side::left) {
        if (block.bond >= mpo.n_sites) throw ModelError("enlarge: left block already spans the chain");
        const auto s = static_cast<std::size_t>(block.bond);
        e.bond = block.bond + 1;
        e.fused = fuse(block.basis, site);
        for (const auto& st : mpo.bonds[s + 1]) e.ops.emplace_back(e.fused.basis, e.fused.basis, st.delta);
        for (const auto& t : mpo.sites[s]) {
            const auto site_entries = entries(t.op);
            for (const auto& [key, m] : block.ops[t.from].blocks()) {
                const std::size_t lo = *block.basis.find(key.row), li = *block.basis.find(key.col);
                for (const auto& se : site_entries) {
                    const auto [so, oo] = e.fused.locate(lo, se.out);
                    const auto [si, oi] = e.fused.locate(li, se.in);
                    Matrix& dst = e.ops[t.to].block({e.fused.basis[so].qn, e.fused.basis[si].qn});
                    for (Index c = 0; c < m.cols(); ++c)
                        for (Index r = 0; r < m.rows(); ++r) dst(oo + r, oi + c) += se.value * m(r, c);
                }
            }
        }
    } else {
        if (block.bond <= 0) throw ModelError("enlarge: right block already spans the chain");
        const auto s = static_cast<std::size_t>(block.bond - 1);
        e.bond = block.bond - 1;
        e.fused = fuse(site, block.basis);
        for (const auto& st : mpo.bonds[s]) e.ops.emplace_back(e.fused.basis, e.fused.basis, -st.delta);
        for (const auto& t : mpo.sites[s]) {
            const auto site_entries = entries(t.op);
            for (const auto& [key, m] : block.ops[t.to].blocks()) {
                const std::size_t ro = *block.basis.find(key.row), ri = *block.basis.find(key.col);
                for (const auto& se : site_entries) {
                    const auto [so, oo] = e.fused.locate(se.out, ro);
                    const auto [si, oi] = e.fused.locate(se.in, ri);
                    Matrix& dst = e.ops[t.from].block({e.fused.basis[so].qn, e.fused.basis[si].qn});
                    for (Index c = 0; c < m.cols(); ++c)
                        for (Index r = 0; r < m.rows(); ++r) dst(oo + r, oi + c) += se.value * m(r, c);
                }
            }
        }
    }
    return e;
}

std::set<QuantumNumber> reachable(const LocalBasis& site, int sites) {
    std::set<QuantumNumber> cur{QuantumNumber{}};
    for (int k = 0; k < sites; ++k) {
        std::set<QuantumNumber> next;
        for (const auto& q : cur)
            for (const auto& e : site.sectors.entries()) next.insert(q + e.qn);
        cur = std::move(next);
    }
    return cur;
}

}  // namespace sdmrg
