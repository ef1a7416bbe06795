#include "sdmrg/model/dense.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>

namespace sdmrg::dense {
namespace {

std::int64_t checked_power(Index d, int n, std::int64_t guard) {
    std::int64_t dim = 1;
    for (int k = 0; k < n; ++k) {
        dim *= d;
        if (dim > guard) throw ModelError("dense: dimension exceeds guard " + std::to_string(guard));
    }
    return dim;
}

void add_kron(Matrix& out, const Matrix& a, const Matrix& b, double w = 1.0) {
    for (Index ja = 0; ja < a.cols(); ++ja)
        for (Index ia = 0; ia < a.rows(); ++ia) {
            const double x = w * a(ia, ja);
            if (x == 0.0) continue;
            for (Index jb = 0; jb < b.cols(); ++jb)
                for (Index ib = 0; ib < b.rows(); ++ib)
                    out(ia * b.rows() + ib, ja * b.cols() + jb) += x * b(ib, jb);
        }
}

// Occupation bit string of a product state; bit 2k is site k up, bit 2k+1
// site k down (fermions), or bit k set for spin up (spins).
std::uint64_t to_bits(const Model& m, std::int64_t x) {
    const Index d = m.site.dim();
    std::uint64_t bits = 0;
    for (int k = m.n_sites - 1; k >= 0; --k, x /= d) {
        const auto s = static_cast<int>(x % d);
        if (m.site.kind == SiteKind::spin_half) {
            if (s == 1) bits |= std::uint64_t{1} << k;
        } else {
            if (s == 2 || s == 3) bits |= std::uint64_t{1} << (2 * k);
            if (s == 1 || s == 3) bits |= std::uint64_t{1} << (2 * k + 1);
        }
    }
    return bits;
}

std::int64_t from_bits(const Model& m, std::uint64_t bits) {
    const Index d = m.site.dim();
    std::int64_t x = 0;
    for (int k = 0; k < m.n_sites; ++k) {
        int s = 0;
        if (m.site.kind == SiteKind::spin_half) {
            s = static_cast<int>((bits >> k) & 1u);
        } else {
            const bool up = (bits >> (2 * k)) & 1u, dn = (bits >> (2 * k + 1)) & 1u;
            s = up ? (dn ? 3 : 2) : (dn ? 1 : 0);
        }
        x = x * d + s;
    }
    return x;
}

// Applies one elementary operator; returns false when the result vanishes.
bool apply(const OpFactor& f, std::uint64_t& bits, double& amp) {
    const int k = f.site;
    auto flip_mode = [&](int p, bool create) {
        const std::uint64_t mask = std::uint64_t{1} << p;
        if (static_cast<bool>(bits & mask) == create) return false;
        if (std::popcount(bits & (mask - 1)) % 2) amp = -amp;
        bits ^= mask;
        return true;
    };
    const std::uint64_t spin = std::uint64_t{1} << k;
    switch (f.op) {
        case SiteOp::cdag_up: return flip_mode(2 * k, true);
        case SiteOp::cdag_dn: return flip_mode(2 * k + 1, true);
        case SiteOp::c_up: return flip_mode(2 * k, false);
        case SiteOp::c_dn: return flip_mode(2 * k + 1, false);
        case SiteOp::sz: amp *= (bits & spin) ? 0.5 : -0.5; return true;
        case SiteOp::splus:
            if (bits & spin) return false;
            bits |= spin;
            return true;
        case SiteOp::sminus:
            if (!(bits & spin)) return false;
            bits &= ~spin;
            return true;
    }
    return false;
}

}  // namespace

std::vector<QuantumNumber> state_labels(const Model& model) {
    const Index d = model.site.dim();
    const std::int64_t dim = checked_power(d, model.n_sites, std::int64_t{1} << 40);
    std::vector<QuantumNumber> out(static_cast<std::size_t>(dim));
    for (std::int64_t x = 0; x < dim; ++x) {
        QuantumNumber q;
        std::int64_t y = x;
        for (int k = 0; k < model.n_sites; ++k, y /= d) q += model.site.state_qn(y % d);
        out[static_cast<std::size_t>(x)] = q;
    }
    return out;
}

std::vector<std::int64_t> sector_states(const Model& model, QuantumNumber target) {
    const auto labels = state_labels(model);
    std::vector<std::int64_t> out;
    for (std::size_t x = 0; x < labels.size(); ++x)
        if (labels[x] == target) out.push_back(static_cast<std::int64_t>(x));
    return out;
}

Matrix hamiltonian(const Model& model, const std::vector<std::int64_t>& states) {
    const auto n = static_cast<Index>(states.size());
    Matrix h(n, n);
    for (Index c = 0; c < n; ++c) {
        const std::uint64_t start = to_bits(model, states[static_cast<std::size_t>(c)]);
        for (const Term& t : model.terms) {
            std::uint64_t bits = start;
            double amp = t.coefficient;
            bool alive = true;
            for (auto it = t.ops.rbegin(); it != t.ops.rend() && alive; ++it) alive = apply(*it, bits, amp);
            if (!alive || amp == 0.0) continue;
            const std::int64_t x = from_bits(model, bits);
            const auto pos = std::lower_bound(states.begin(), states.end(), x);
            if (pos == states.end() || *pos != x)
                throw ModelError("dense: term leaves the selected state set");
            h(pos - states.begin(), c) += amp;
        }
    }
    return h;
}

Matrix hamiltonian(const Model& model, std::int64_t guard) {
    const std::int64_t dim = checked_power(model.site.dim(), model.n_sites, guard);
    std::vector<std::int64_t> all(static_cast<std::size_t>(dim));
    for (std::int64_t x = 0; x < dim; ++x) all[static_cast<std::size_t>(x)] = x;
    return hamiltonian(model, all);
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    add_kron(out, a, b);
    return out;
}

std::vector<Matrix> left_block(const Mpo& mpo, int b) {
    std::vector<Matrix> cur(mpo.bonds[0].size(), Matrix(1, 1, 1.0));
    Index dim = 1;
    for (int k = 0; k < b; ++k) {
        const Index next_dim = dim * mpo.site.dim();
        std::vector<Matrix> next(mpo.bonds[static_cast<std::size_t>(k) + 1].size(), Matrix(next_dim, next_dim));
        for (const auto& t : mpo.sites[static_cast<std::size_t>(k)]) add_kron(next[t.to], cur[t.from], t.op);
        cur = std::move(next);
        dim = next_dim;
    }
    return cur;
}

std::vector<Matrix> right_block(const Mpo& mpo, int b) {
    std::vector<Matrix> cur(mpo.bonds.back().size(), Matrix(1, 1, 1.0));
    Index dim = 1;
    for (int k = mpo.n_sites - 1; k >= b; --k) {
        const Index next_dim = dim * mpo.site.dim();
        std::vector<Matrix> next(mpo.bonds[static_cast<std::size_t>(k)].size(), Matrix(next_dim, next_dim));
        for (const auto& t : mpo.sites[static_cast<std::size_t>(k)]) add_kron(next[t.from], t.op, cur[t.to]);
        cur = std::move(next);
        dim = next_dim;
    }
    return cur;
}

Matrix from_mpo(const Mpo& mpo, std::int64_t guard) {
    const auto dim = static_cast<Index>(checked_power(mpo.site.dim(), mpo.n_sites, guard));
    auto full = left_block(mpo, mpo.n_sites);
    Matrix h(dim, dim);
    for (const auto& m : full)
        for (Index k = 0; k < h.size(); ++k) h.data()[k] += m.data()[k];
    return h;
}

Matrix from_operator_table(const Mpo& mpo, const OperatorTable& table, std::int64_t guard) {
    const auto dim = static_cast<Index>(checked_power(mpo.site.dim(), mpo.n_sites, guard));
    const int s = table.partition.n_left;
    const auto left = left_block(mpo, s);
    const auto right = right_block(mpo, s + 2);
    const Index d = mpo.site.dim();
    Matrix h(dim, dim);
    for (const auto& row : table.rows) {
        Matrix x(d * d, d * d);
        for (const auto& f : row.factors) x(f.out1 * d + f.out2, f.in1 * d + f.in2) += f.value;
        add_kron(h, kron(left.at(row.left), x), right.at(row.right), row.alpha);
    }
    return h;
}

std::vector<double> eigenvalues(const Matrix& h) {
    Eigen::Map<const Eigen::MatrixXd> m(h.data(), h.rows(), h.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

std::pair<double, std::vector<double>> ground_state(const Matrix& h) {
    Eigen::Map<const Eigen::MatrixXd> m(h.data(), h.rows(), h.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd v = es.eigenvectors().col(0);
    return {es.eigenvalues()(0), std::vector<double>(v.data(), v.data() + v.size())};
}

}  // namespace sdmrg::dense
