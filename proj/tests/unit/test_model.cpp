#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sdmrg/model/dense.hpp"
#include "sdmrg/model/integrals.hpp"
#include "sdmrg/model/model.hpp"
#include "sdmrg/model/mpo.hpp"

namespace sdmrg {
namespace {

Integrals parse(const std::string& text) {
    std::istringstream in(text);
    return parse_integrals(in);
}

Integrals random_integrals(std::mt19937_64& rng, int n, double v_density) {
    std::uniform_real_distribution<double> val(-1.0, 1.0), coin(0.0, 1.0);
    Integrals ints(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) ints.one_body(i, j) = ints.one_body(j, i) = val(rng);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    if (coin(rng) < v_density) ints.add_two_body(i, j, k, l, val(rng));
    ints.core_energy = val(rng);
    ints.normalize();
    return ints;
}

double symmetric_defect(const Matrix& h) { return max_abs_diff(h, h.transposed()); }

void expect_exact_factorization(const Model& m) {
    const Matrix direct = dense::hamiltonian(m);
    const Mpo mpo = build_mpo(m);
    EXPECT_LE(max_abs_diff(dense::from_mpo(mpo), direct), 1e-12);
    for (int s = 0; s + 2 <= m.n_sites; ++s) {
        const auto table = factorize(mpo, {s, m.n_sites - 2 - s});
        EXPECT_LE(max_abs_diff(dense::from_operator_table(mpo, table), direct), 1e-12) << "partition " << s;
    }
}

// ---- integral files -------------------------------------------------------

TEST(Integrals, BareHeaderAndTaggedEntry) {
    const auto ints = parse("2\n1 1 1 -1.0\n");
    EXPECT_EQ(ints.n_modes, 2);
    EXPECT_EQ(ints.one_body(0, 0), -1.0);
    EXPECT_EQ(ints.one_body(1, 1), 0.0);
}

TEST(Integrals, LabeledFormatWithComments) {
    const auto ints = parse("# test\nN 3\nT 1 2 0.5  # hop\nV 1 2 3 1 0.25\nV 1 2 3 1 0.25\nE0 -1.5\n");
    EXPECT_EQ(ints.one_body(0, 1), 0.5);
    EXPECT_EQ(ints.one_body(1, 0), 0.5);
    ASSERT_EQ(ints.two_body.size(), 1u);
    EXPECT_EQ(ints.two_body[0].idx, (std::array<int, 4>{0, 1, 2, 0}));
    EXPECT_EQ(ints.two_body[0].value, 0.5);
    EXPECT_EQ(ints.core_energy, -1.5);
}

TEST(Integrals, TransposeMismatchRejected) {
    EXPECT_THROW(parse("N 2\nT 1 2 0.5\nT 2 1 0.6\n"), IntegralsError);
    EXPECT_NO_THROW(parse("N 2\nT 1 2 0.5\nT 2 1 0.5\n"));
}

TEST(Integrals, ErrorsCarryLineNumbers) {
    try {
        parse("N 2\nT 1 1 1.0\nT 1 3 1.0\n");
        FAIL() << "expected an error";
    } catch (const IntegralsError& e) {
        EXPECT_EQ(e.line(), 3);
    }
    try {
        parse("N 2\nQ 1 1\n");
        FAIL() << "expected an error";
    } catch (const IntegralsError& e) {
        EXPECT_EQ(e.line(), 2);
    }
    EXPECT_THROW(parse("T 1 1 1.0\n"), IntegralsError);
    EXPECT_THROW(parse("N 2\nT 1 1 abc\n"), IntegralsError);
    EXPECT_THROW(load_integrals("/nonexistent/ints.txt"), IntegralsError);
}

TEST(Integrals, RoundTripIsExact) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto ints = random_integrals(rng, 2 + trial % 4, 0.3);
        std::ostringstream out;
        write_integrals(ints, out);
        EXPECT_EQ(parse(out.str()), ints);
    }
    const auto path = std::filesystem::temp_directory_path() / "sdmrg_ints_roundtrip.txt";
    const auto ints = random_integrals(rng, 3, 0.5);
    save_integrals(ints, path.string());
    EXPECT_EQ(load_integrals(path.string()), ints);
    std::filesystem::remove(path);
}

// ---- model builders -------------------------------------------------------

TEST(Model, TwoSpinExchange) {
    const auto ev = dense::eigenvalues(dense::hamiltonian(heisenberg_chain(2, 1.0)));
    ASSERT_EQ(ev.size(), 4u);
    EXPECT_NEAR(ev[0], -0.75, 1e-14);
    for (int k = 1; k < 4; ++k) EXPECT_NEAR(ev[static_cast<std::size_t>(k)], 0.25, 1e-14);
}

TEST(Model, TwoSiteHubbardFreeElectrons) {
    const Model m = build_model({ModelKind::hubbard_chain, 2, 1.0, 1.0, 0.0});
    const auto states = dense::sector_states(m, {2, 0});
    EXPECT_EQ(states.size(), 4u);
    EXPECT_NEAR(dense::eigenvalues(dense::hamiltonian(m, states))[0], -2.0, 1e-14);
}

TEST(Model, SingleOrbitalDoublyOccupied) {
    const auto path = std::filesystem::temp_directory_path() / "sdmrg_t00.txt";
    std::ofstream(path) << "2\n1 1 1 -1.0\n";
    ModelParams params{ModelKind::integral_file};
    params.path = path.string();
    const Model m = build_model(params);
    EXPECT_NEAR(dense::eigenvalues(dense::hamiltonian(m))[0], -2.0, 1e-14);
    std::filesystem::remove(path);
}

TEST(Model, HubbardAtomicLimit) {
    // t = 0: energy is U times the number of doubly occupied sites
    const Model m = build_model({ModelKind::hubbard_chain, 3, 1.0, 0.0, 4.0});
    const auto h = dense::hamiltonian(m);
    for (Index x = 0; x < h.rows(); ++x) {
        int doubles = 0;
        Index y = x;
        for (int k = 0; k < 3; ++k, y /= 4) doubles += (y % 4 == 3);
        EXPECT_DOUBLE_EQ(h(x, x), 4.0 * doubles);
    }
}

TEST(Model, InvalidParametersRejected) {
    EXPECT_THROW(build_model({ModelKind::heisenberg_chain, 1}), ModelError);
    EXPECT_THROW(build_model({ModelKind::hubbard_chain, 4, 1.0, NAN, 1.0}), ModelError);
    ModelParams missing{ModelKind::integral_file};
    missing.path = "/nonexistent/file";
    EXPECT_THROW(build_model(missing), IntegralsError);
}

TEST(Model, SiteOperatorsFollowSelectionRule) {
    for (const auto& basis : {LocalBasis::fermion(), LocalBasis::spin_half()}) {
        const std::vector<SiteOp> ops = basis.kind == SiteKind::fermion
                                            ? std::vector{SiteOp::cdag_up, SiteOp::cdag_dn, SiteOp::c_up, SiteOp::c_dn}
                                            : std::vector{SiteOp::sz, SiteOp::splus, SiteOp::sminus};
        for (SiteOp op : ops) EXPECT_NO_THROW(site_operator(basis, basis.matrix(op), basis.delta(op)).validate());
    }
    // spin-orbital anticommutation inside one site
    const auto b = LocalBasis::fermion();
    const Matrix up = b.matrix(SiteOp::cdag_up), dn = b.matrix(SiteOp::cdag_dn);
    Matrix anti(4, 4);
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j)
            for (Index k = 0; k < 4; ++k) anti(i, j) += up(i, k) * dn(k, j) + dn(i, k) * up(k, j);
    EXPECT_EQ(anti.max_abs(), 0.0);
}

// ---- factorization ---------------------------------------------------------

TEST(Factorize, HeisenbergFourSites) { expect_exact_factorization(heisenberg_chain(4, 1.0)); }

TEST(Factorize, HubbardFourSites) {
    expect_exact_factorization(build_model({ModelKind::hubbard_chain, 4, 1.0, 1.0, 3.0}));
}

TEST(Factorize, SingleQuarticTerm) {
    Integrals ints(4);
    ints.add_two_body(0, 1, 2, 3, 0.7);
    ints.normalize();
    const Model m = fermion_model(ints);
    ASSERT_EQ(m.terms.size(), 4u);
    expect_exact_factorization(m);
    // outer operators c+_0s and c_3s fix the row; the inner spin is summed in the site factors
    const auto table = factorize(build_mpo(m), {1, 1});
    EXPECT_EQ(table.rows.size(), 2u);
}

TEST(Factorize, RandomFermionModels) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 2 + trial % 3;
        expect_exact_factorization(fermion_model(random_integrals(rng, n, 0.4)));
    }
}

TEST(Factorize, RandomSpinCouplings) {
    std::mt19937_64 rng(78);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        Model m = heisenberg_chain(6, 1.0);
        m.terms.clear();
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j) {
                const double jz = val(rng), jx = val(rng);
                m.terms.push_back({jz, {{i, SiteOp::sz}, {j, SiteOp::sz}}});
                m.terms.push_back({jx, {{i, SiteOp::splus}, {j, SiteOp::sminus}}});
                m.terms.push_back({jx, {{j, SiteOp::splus}, {i, SiteOp::sminus}}});
            }
        expect_exact_factorization(m);
    }
}

TEST(Factorize, HermitianAndConserving) {
    std::mt19937_64 rng(79);
    auto ints = random_integrals(rng, 4, 0.0);
    // symmetrized two-body part keeps H hermitian
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (int k = 0; k < 30; ++k) {
        std::uniform_int_distribution<int> idx(0, 3);
        const int i = idx(rng), j = idx(rng), a = idx(rng), b = idx(rng);
        const double v = val(rng);
        ints.add_two_body(i, j, a, b, v);
        ints.add_two_body(b, a, j, i, v);
    }
    ints.normalize();
    const Model m = fermion_model(ints);
    const Mpo mpo = build_mpo(m);
    const Matrix h = dense::from_operator_table(mpo, factorize(mpo, {1, 1}));
    EXPECT_LE(symmetric_defect(h), 1e-12);
    const auto labels = dense::state_labels(m);
    // [H, N] = [H, 2Sz] = 0 is equivalent to H connecting only equal labels
    double commutator = 0.0;
    for (Index c = 0; c < h.cols(); ++c)
        for (Index r = 0; r < h.rows(); ++r) {
            const auto dq = labels[static_cast<std::size_t>(r)] - labels[static_cast<std::size_t>(c)];
            commutator = std::max(commutator, std::abs(h(r, c)) * (std::abs(dq.particles()) + std::abs(dq.two_sz())));
        }
    EXPECT_LE(commutator, 1e-12);
}

TEST(Factorize, TransitionsRespectSelectionRule) {
    std::mt19937_64 rng(80);
    const Mpo mpo = build_mpo(fermion_model(random_integrals(rng, 4, 0.3)));
    for (std::size_t b = 0; b < mpo.sites.size(); ++b)
        for (const auto& t : mpo.sites[b]) {
            EXPECT_EQ(t.delta, mpo.bonds[b + 1][t.to].delta - mpo.bonds[b][t.from].delta);
            EXPECT_NO_THROW(site_operator(mpo.site, t.op, t.delta));
        }
    EXPECT_EQ(mpo.bonds.front().size(), 1u);
    EXPECT_EQ(mpo.bonds.back().size(), 1u);
}

TEST(Factorize, BadPartitionRejected) {
    const Mpo mpo = build_mpo(heisenberg_chain(4, 1.0));
    EXPECT_THROW(factorize(mpo, {1, 2}), PartitionError);
    EXPECT_THROW(factorize(mpo, {-1, 3}), PartitionError);
    EXPECT_NO_THROW(factorize(mpo, {2, 0}));
}

TEST(Factorize, FingerprintStable) {
    const auto a = build_mpo(heisenberg_chain(6, 1.0)).fingerprint();
    EXPECT_EQ(a, build_mpo(heisenberg_chain(6, 1.0)).fingerprint());
    EXPECT_NE(a, build_mpo(heisenberg_chain(6, 0.5)).fingerprint());
}

// ---- auxiliary operator counts ---------------------------------------------

TEST(AuxiliaryCount, HeisenbergIsConstant) {
    const Model m = heisenberg_chain(12, 1.0);
    const Mpo mpo = build_mpo(m);
    for (int b = 0; b <= 12; ++b) {
        EXPECT_EQ(auxiliary_count(m, b), mpo.bond_dimension(b));
        EXPECT_LE(auxiliary_count(m, b), 5u);
    }
    EXPECT_EQ(auxiliary_count(m, 6), 5u);
}

TEST(AuxiliaryCount, TwoSiteEnumeration) {
    // S^z_0, S^+_0, S^-_0 cross the only inner bond
    EXPECT_EQ(auxiliary_count(heisenberg_chain(2, 1.0), 1), 3u);
    EXPECT_EQ(auxiliary_count(heisenberg_chain(2, 1.0), 0), 1u);
    EXPECT_EQ(auxiliary_count(heisenberg_chain(2, 1.0), 2), 1u);
    // hopping: c+_0s and c_0s (4), on-site U: finished left term and untouched right term (2)
    EXPECT_EQ(auxiliary_count(build_model({ModelKind::hubbard_chain, 2, 1.0, 1.0, 2.0}), 1), 6u);
}

TEST(AuxiliaryCount, QuadraticInDenseTwoBody) {
    std::mt19937_64 rng(81);
    std::vector<double> logn, logc;
    std::size_t c8 = 0, c16 = 0;
    for (int n : {4, 6, 8, 12, 16}) {
        const Model m = fermion_model(random_integrals(rng, n, 1.0));
        std::size_t peak = 0;
        for (int b = 0; b <= n; ++b) peak = std::max(peak, auxiliary_count(m, b));
        if (n == 8) c8 = peak;
        if (n == 16) c16 = peak;
        logn.push_back(std::log(n));
        logc.push_back(std::log(static_cast<double>(peak)));
    }
    const double k = static_cast<double>(logn.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < logn.size(); ++i) {
        sx += logn[i];
        sy += logc[i];
        sxx += logn[i] * logn[i];
        sxy += logn[i] * logc[i];
    }
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    EXPECT_LE(slope, 2.1);
    EXPECT_LE(static_cast<double>(c16) / static_cast<double>(c8), 4.5);
}

}  // namespace
}  // namespace sdmrg
