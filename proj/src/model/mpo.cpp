#include "sdmrg/model/mpo.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <numeric>
#include <set>

namespace sdmrg {
namespace {

Matrix product(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (Index j = 0; j < b.cols(); ++j)
        for (Index k = 0; k < a.cols(); ++k) {
            const double bkj = b(k, j);
            if (bkj == 0.0) continue;
            for (Index i = 0; i < a.rows(); ++i) c(i, j) += a(i, k) * bkj;
        }
    return c;
}

Matrix group_matrix(const LocalBasis& basis, const std::vector<SiteOp>& ops) {
    Matrix m = Matrix::identity(basis.dim());
    for (SiteOp op : ops) m = product(m, basis.matrix(op));
    return m;
}

int fermion_count(const OpGroup& g) {
    return static_cast<int>(std::count_if(g.ops.begin(), g.ops.end(), is_fermionic));
}

QuantumNumber group_delta(const LocalBasis& basis, const OpGroup& g) {
    QuantumNumber q;
    for (SiteOp op : g.ops) q += basis.delta(op);
    return q;
}

// Groups on the keyed side of bond b, and which side that is.
struct BondKey {
    bool right_keyed = false;
    std::size_t begin = 0, end = 0;  // slice of the term's groups
};

BondKey bond_key(const CanonicalTerm& t, int b, int n_sites) {
    const std::size_t g = t.groups.size();
    std::size_t gl = 0;
    while (gl < g && t.groups[gl].site < b) ++gl;
    const std::size_t gr = g - gl;
    const bool left = gl < gr || (gl == gr && b <= n_sites - b);
    return left ? BondKey{false, 0, gl} : BondKey{true, gl, g};
}

using StateKey = std::pair<bool, std::vector<OpGroup>>;

StateKey make_key(const CanonicalTerm& t, const BondKey& k) {
    return {k.right_keyed, std::vector<OpGroup>(t.groups.begin() + static_cast<std::ptrdiff_t>(k.begin),
                                                t.groups.begin() + static_cast<std::ptrdiff_t>(k.end))};
}

template <class T>
void hash_bytes(std::uint64_t& h, const T& v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    for (unsigned char c : buf) {
        h ^= c;
        h *= 1099511628211ull;
    }
}

}  // namespace

std::vector<CanonicalTerm> canonical_terms(const Model& model) {
    const LocalBasis& basis = model.site;
    std::map<std::vector<OpGroup>, double> merged;
    std::map<std::vector<SiteOp>, bool> vanishes;

    for (const Term& term : model.terms) {
        QuantumNumber total;
        int fermions = 0;
        for (const auto& f : term.ops) {
            if (f.site < 0 || f.site >= model.n_sites) throw ModelError("term acts outside the chain");
            total += basis.delta(f.op);
            fermions += is_fermionic(f.op);
        }
        if (total != QuantumNumber{}) throw ModelError("term does not conserve quantum numbers");
        if (fermions % 2 != 0) throw ModelError("term has odd fermion parity");

        std::vector<std::size_t> order(term.ops.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return term.ops[a].site < term.ops[b].site; });
        // anticommuting past each other: fermionic pairs on different sites that swap order
        int swaps = 0;
        for (std::size_t x = 0; x < term.ops.size(); ++x)
            for (std::size_t y = x + 1; y < term.ops.size(); ++y)
                if (term.ops[x].site > term.ops[y].site && is_fermionic(term.ops[x].op) &&
                    is_fermionic(term.ops[y].op))
                    ++swaps;

        std::vector<OpGroup> groups;
        for (std::size_t idx : order) {
            const auto& f = term.ops[idx];
            if (groups.empty() || groups.back().site != f.site) groups.push_back({f.site, {}});
            groups.back().ops.push_back(f.op);
        }
        bool zero = false;
        for (const auto& g : groups) {
            auto it = vanishes.find(g.ops);
            if (it == vanishes.end())
                it = vanishes.emplace(g.ops, group_matrix(basis, g.ops).max_abs() == 0.0).first;
            zero = zero || it->second;
        }
        if (zero || term.coefficient == 0.0) continue;
        merged[std::move(groups)] += (swaps % 2 ? -1.0 : 1.0) * term.coefficient;
    }

    std::vector<CanonicalTerm> out;
    out.reserve(merged.size());
    for (auto& [groups, c] : merged)
        if (c != 0.0) out.push_back({c, groups});
    return out;
}

Mpo build_mpo(const Model& model) {
    const int n = model.n_sites;
    const LocalBasis& basis = model.site;
    const Matrix z = basis.parity();
    const Matrix id = Matrix::identity(basis.dim());

    Mpo mpo;
    mpo.n_sites = n;
    mpo.site = basis;
    mpo.bonds.resize(static_cast<std::size_t>(n) + 1);
    mpo.sites.resize(static_cast<std::size_t>(n));

    std::vector<std::map<StateKey, std::size_t>> states(static_cast<std::size_t>(n) + 1);
    std::vector<std::map<std::pair<std::size_t, std::size_t>, std::size_t>> edges(static_cast<std::size_t>(n));

    auto state_of = [&](const CanonicalTerm& t, int b) {
        const BondKey k = bond_key(t, b, n);
        auto& table = states[static_cast<std::size_t>(b)];
        auto [it, fresh] = table.emplace(make_key(t, k), table.size());
        if (fresh) {
            QuantumNumber q;
            for (std::size_t g = k.begin; g < k.end; ++g) q += group_delta(basis, t.groups[g]);
            mpo.bonds[static_cast<std::size_t>(b)].push_back({k.right_keyed, k.begin == k.end, k.right_keyed ? -q : q});
        }
        return it->second;
    };

    for (const CanonicalTerm& t : canonical_terms(model)) {
        // fermionic operators strictly right of site b, for the parity string
        std::vector<int> right_fermions(static_cast<std::size_t>(n) + 1, 0);
        for (const auto& g : t.groups)
            for (int s = 0; s < g.site; ++s) right_fermions[static_cast<std::size_t>(s)] += fermion_count(g);

        std::size_t from = state_of(t, 0);
        std::size_t gi = 0;
        for (int b = 0; b < n; ++b) {
            const std::size_t to = state_of(t, b + 1);
            const bool from_right = mpo.bonds[static_cast<std::size_t>(b)][from].right_keyed;
            const bool to_right = mpo.bonds[static_cast<std::size_t>(b) + 1][to].right_keyed;
            const bool carries_coefficient = !from_right && to_right;

            Matrix op = id;
            QuantumNumber delta;
            if (gi < t.groups.size() && t.groups[gi].site == b) {
                op = group_matrix(basis, t.groups[gi].ops);
                delta = group_delta(basis, t.groups[gi]);
                ++gi;
            }
            if (right_fermions[static_cast<std::size_t>(b)] % 2) op = product(op, z);

            auto& site_edges = mpo.sites[static_cast<std::size_t>(b)];
            auto [it, fresh] = edges[static_cast<std::size_t>(b)].emplace(std::pair{from, to}, site_edges.size());
            if (fresh) {
                site_edges.push_back({from, to, Matrix(basis.dim(), basis.dim()), delta});
                if (!carries_coefficient) site_edges.back().op = op;
            }
            if (carries_coefficient) {
                auto& acc = site_edges[it->second].op;
                for (Index k = 0; k < acc.size(); ++k) acc.data()[k] += t.coefficient * op.data()[k];
            }
            from = to;
        }
    }
    return mpo;
}

std::size_t auxiliary_count(const Model& model, int boundary) {
    if (boundary < 0 || boundary > model.n_sites) throw PartitionError("auxiliary_count: boundary out of range");
    std::set<StateKey> keys;
    for (const auto& t : canonical_terms(model)) keys.insert(make_key(t, bond_key(t, boundary, model.n_sites)));
    return keys.size();
}

std::uint64_t Mpo::fingerprint() const {
    std::uint64_t h = 14695981039346656037ull;
    hash_bytes(h, n_sites);
    hash_bytes(h, static_cast<int>(site.kind));
    for (const auto& bond : bonds) {
        hash_bytes(h, bond.size());
        for (const auto& s : bond) {
            hash_bytes(h, s.right_keyed);
            hash_bytes(h, s.empty_key);
            hash_bytes(h, s.delta.c);
        }
    }
    for (const auto& edges : sites) {
        hash_bytes(h, edges.size());
        for (const auto& e : edges) {
            hash_bytes(h, e.from);
            hash_bytes(h, e.to);
            hash_bytes(h, e.delta.c);
            for (double v : e.op.values()) hash_bytes(h, v);
        }
    }
    return h;
}

OperatorTable factorize(const Mpo& mpo, Partition p) {
    if (p.n_left < 0 || p.n_right < 0 || p.n_left + 2 + p.n_right != mpo.n_sites)
        throw PartitionError("factorize: partition (" + std::to_string(p.n_left) + ", 1, 1, " +
                             std::to_string(p.n_right) + ") does not cover " +
                             std::to_string(mpo.n_sites) + " sites");
    const auto s = static_cast<std::size_t>(p.n_left);
    const Index d = mpo.site.dim();

    std::map<std::size_t, std::vector<const Transition*>> second_by_from;
    for (const auto& t : mpo.sites[s + 1]) second_by_from[t.from].push_back(&t);

    std::map<std::pair<std::size_t, std::size_t>, Matrix> x;
    for (const auto& t1 : mpo.sites[s]) {
        auto it = second_by_from.find(t1.to);
        if (it == second_by_from.end()) continue;
        for (const Transition* t2 : it->second) {
            auto [xi, fresh] = x.try_emplace({t1.from, t2->to}, d * d, d * d);
            Matrix& m = xi->second;
            for (Index i1 = 0; i1 < d; ++i1)
                for (Index o1 = 0; o1 < d; ++o1) {
                    const double a = t1.op(o1, i1);
                    if (a == 0.0) continue;
                    for (Index i2 = 0; i2 < d; ++i2)
                        for (Index o2 = 0; o2 < d; ++o2) m(o1 * d + o2, i1 * d + i2) += a * t2->op(o2, i2);
                }
        }
    }

    OperatorTable table{p, {}};
    for (const auto& [key, m] : x) {
        OperatorTableRow row{key.first, key.second, 1.0, {}};
        for (Index c = 0; c < m.cols(); ++c)
            for (Index r = 0; r < m.rows(); ++r)
                if (m(r, c) != 0.0)
                    row.factors.push_back({static_cast<std::uint8_t>(r / d), static_cast<std::uint8_t>(r % d),
                                           static_cast<std::uint8_t>(c / d), static_cast<std::uint8_t>(c % d),
                                           m(r, c)});
        if (!row.factors.empty()) table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace sdmrg
