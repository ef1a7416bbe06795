#include "sdmrg/model/model.hpp"

#include <cmath>

namespace sdmrg {

void ModelParams::validate() const {
    // the integral file carries its own mode count
    if (kind != ModelKind::integral_file && n < 2) throw ModelError("model: N must be at least 2");
    if (!std::isfinite(j) || !std::isfinite(t) || !std::isfinite(u))
        throw ModelError("model: parameters must be finite");
    if (kind == ModelKind::integral_file && path.empty())
        throw ModelError("model: integral file path missing");
}

bool is_fermionic(SiteOp op) {
    return op == SiteOp::cdag_up || op == SiteOp::cdag_dn || op == SiteOp::c_up || op == SiteOp::c_dn;
}

const char* name_of(SiteOp op) {
    switch (op) {
        case SiteOp::cdag_up: return "c+u";
        case SiteOp::cdag_dn: return "c+d";
        case SiteOp::c_up: return "cu";
        case SiteOp::c_dn: return "cd";
        case SiteOp::sz: return "Sz";
        case SiteOp::splus: return "S+";
        case SiteOp::sminus: return "S-";
    }
    return "?";
}

LocalBasis LocalBasis::spin_half() {
    return {SiteKind::spin_half, SectorBasis({{{0, -1}, 1}, {{0, 1}, 1}})};
}

LocalBasis LocalBasis::fermion() {
    return {SiteKind::fermion, SectorBasis({{{0, 0}, 1}, {{1, -1}, 1}, {{1, 1}, 1}, {{2, 0}, 1}})};
}

Matrix LocalBasis::matrix(SiteOp op) const {
    if ((kind == SiteKind::fermion) != is_fermionic(op))
        throw ModelError(std::string("operator ") + name_of(op) + " does not act on this site kind");
    if (kind == SiteKind::spin_half) {
        Matrix m(2, 2);
        switch (op) {
            case SiteOp::sz: m(0, 0) = -0.5; m(1, 1) = 0.5; break;
            case SiteOp::splus: m(1, 0) = 1.0; break;
            default: m(0, 1) = 1.0; break;
        }
        return m;
    }
    // order: empty, down, up, up-down
    Matrix up(4, 4), dn(4, 4);
    up(2, 0) = 1.0;
    up(3, 1) = 1.0;
    dn(1, 0) = 1.0;
    dn(3, 2) = -1.0;  // c+_dn |up> = -c+_up c+_dn |0>
    switch (op) {
        case SiteOp::cdag_up: return up;
        case SiteOp::cdag_dn: return dn;
        case SiteOp::c_up: return up.transposed();
        default: return dn.transposed();
    }
}

QuantumNumber LocalBasis::delta(SiteOp op) const {
    switch (op) {
        case SiteOp::cdag_up: return {1, 1};
        case SiteOp::cdag_dn: return {1, -1};
        case SiteOp::c_up: return {-1, -1};
        case SiteOp::c_dn: return {-1, 1};
        case SiteOp::sz: return {0, 0};
        case SiteOp::splus: return {0, 2};
        case SiteOp::sminus: return {0, -2};
    }
    return {};
}

Matrix LocalBasis::parity() const {
    Matrix z = Matrix::identity(dim());
    if (kind == SiteKind::fermion) {
        z(1, 1) = -1.0;
        z(2, 2) = -1.0;
    }
    return z;
}

SectorMatrix site_operator(const LocalBasis& basis, const Matrix& m, QuantumNumber delta) {
    SectorMatrix out(basis.sectors, basis.sectors, delta);
    for (Index c = 0; c < m.cols(); ++c)
        for (Index r = 0; r < m.rows(); ++r) {
            if (m(r, c) == 0.0) continue;
            const QuantumNumber qr = basis.state_qn(r), qc = basis.state_qn(c);
            if (qr != qc + delta)
                throw ModelError("site_operator: entry (" + std::to_string(r) + "," + std::to_string(c) +
                                 ") violates the selection rule");
            out.set_block({qr, qc}, Matrix(1, 1, m(r, c)));
        }
    return out;
}

QuantumNumber Model::default_target() const {
    if (site.kind == SiteKind::spin_half) return {0, n_sites % 2};
    return {n_sites, 0};
}

double Model::hilbert_size() const {
    return std::pow(static_cast<double>(site.dim()), n_sites);
}

Model heisenberg_chain(int n, double j) {
    ModelParams params;
    params.n = n;
    params.j = j;
    params.validate();
    Model m;
    m.kind = ModelKind::heisenberg_chain;
    m.n_sites = n;
    m.site = LocalBasis::spin_half();
    m.j = j;
    for (int i = 0; i + 1 < n; ++i) {
        m.terms.push_back({j, {{i, SiteOp::sz}, {i + 1, SiteOp::sz}}});
        m.terms.push_back({0.5 * j, {{i, SiteOp::splus}, {i + 1, SiteOp::sminus}}});
        m.terms.push_back({0.5 * j, {{i, SiteOp::sminus}, {i + 1, SiteOp::splus}}});
    }
    return m;
}

Integrals hubbard_integrals(int n, double t, double u) {
    ModelParams params;
    params.kind = ModelKind::hubbard_chain;
    params.n = n;
    params.t = t;
    params.u = u;
    params.validate();
    Integrals ints(n);
    for (int i = 0; i + 1 < n; ++i) {
        ints.one_body(i, i + 1) = -t;
        ints.one_body(i + 1, i) = -t;
    }
    // sum_{st} c+_is c+_it c_it c_is = 2 n_up n_dn
    if (u != 0.0)
        for (int i = 0; i < n; ++i) ints.add_two_body(i, i, i, i, 0.5 * u);
    ints.normalize();
    return ints;
}

Model fermion_model(Integrals ints, ModelKind kind) {
    ints.validate();
    Model m;
    m.kind = kind;
    m.n_sites = ints.n_modes;
    m.site = LocalBasis::fermion();
    constexpr SiteOp cdag[2] = {SiteOp::cdag_up, SiteOp::cdag_dn};
    constexpr SiteOp ann[2] = {SiteOp::c_up, SiteOp::c_dn};
    if (ints.core_energy != 0.0) m.terms.push_back({ints.core_energy, {}});
    for (int i = 0; i < ints.n_modes; ++i)
        for (int j = 0; j < ints.n_modes; ++j) {
            const double v = ints.one_body(i, j);
            if (v == 0.0) continue;
            for (int s = 0; s < 2; ++s) m.terms.push_back({v, {{i, cdag[s]}, {j, ann[s]}}});
        }
    for (const auto& e : ints.two_body) {
        const auto [i, j, k, l] = e.idx;
        for (int s = 0; s < 2; ++s)
            for (int t = 0; t < 2; ++t)
                m.terms.push_back({e.value, {{i, cdag[s]}, {j, cdag[t]}, {k, ann[t]}, {l, ann[s]}}});
    }
    m.integrals = std::move(ints);
    return m;
}

Model build_model(const ModelParams& params) {
    params.validate();
    switch (params.kind) {
        case ModelKind::heisenberg_chain: return heisenberg_chain(params.n, params.j);
        case ModelKind::hubbard_chain:
            return fermion_model(hubbard_integrals(params.n, params.t, params.u), ModelKind::hubbard_chain);
        case ModelKind::integral_file: {
            Integrals ints = load_integrals(params.path);
            if (ints.n_modes < 2) throw ModelError("model: integral file needs at least 2 orbitals");
            return fermion_model(std::move(ints), ModelKind::integral_file);
        }
    }
    throw ModelError("model: unknown kind");
}

}  // namespace sdmrg
