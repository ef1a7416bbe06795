#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "sdmrg/core/sector_ops.hpp"
#include "sdmrg/dmrg/checkpoint.hpp"
#include "sdmrg/dmrg/dmrg.hpp"
#include "sdmrg/model/dense.hpp"
#include "sdmrg/sbmm4s/sbmm4s.hpp"
#include "test_support.hpp"

using namespace sdmrg;

namespace {

Matrix random_symmetric(Index n, std::mt19937_64& rng) {
    Matrix a(n, n);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i <= j; ++i) a(i, j) = a(j, i) = u(rng);
    return a;
}

ApplyFn dense_apply(const Matrix& h) {
    return [&h](std::span<const double> x, std::span<double> y) {
        for (Index i = 0; i < h.rows(); ++i) {
            double s = 0.0;
            for (Index j = 0; j < h.cols(); ++j) s += h(i, j) * x[static_cast<std::size_t>(j)];
            y[static_cast<std::size_t>(i)] = s;
        }
    };
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Matrix unit_column(Index n, Index k) {
    Matrix e(n, 1);
    e(k, 0) = 1.0;
    return e;
}

Matrix column(const Matrix& m, Index j) {
    Matrix c(m.rows(), 1);
    for (Index i = 0; i < m.rows(); ++i) c(i, 0) = m(i, j);
    return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) { return sdmrg::testing::naive_multiply(a, b); }

// Block basis states written out in the product basis of the block's sites,
// one column per state, built only from the stored transforms.
Matrix embed_left(const EngineState& st, const LocalBasis& site, int b) {
    Matrix e(1, 1, 1.0);
    const Index d = site.dim();
    for (int k = 1; k <= b; ++k) {
        const BlockState& prev = *st.left[static_cast<std::size_t>(k - 1)];
        const BlockState& cur = *st.left[static_cast<std::size_t>(k)];
        const FusedBasis f = fuse(prev.basis, site.sectors);
        Matrix m(e.rows() * d, f.basis.total_dimension());
        for (std::size_t q = 0; q < f.basis.size(); ++q)
            for (const auto& p : f.parts[q])
                for (Index ia = 0; ia < p.a_dim; ++ia) {
                    const Matrix v = dense::kron(column(e, prev.basis[p.a_sector].offset + ia),
                                                 unit_column(d, site.sectors[p.b_sector].offset));
                    const Index c = f.basis[q].offset + p.offset + ia;
                    for (Index i = 0; i < v.rows(); ++i) m(i, c) = v(i, 0);
                }
        e = matmul(m, densify(cur.transform));
    }
    return e;
}

Matrix embed_right(const EngineState& st, const LocalBasis& site, int b) {
    const int n = st.n_sites;
    Matrix e(1, 1, 1.0);
    const Index d = site.dim();
    for (int k = n - 1; k >= b; --k) {
        const BlockState& prev = *st.right[static_cast<std::size_t>(k + 1)];
        const BlockState& cur = *st.right[static_cast<std::size_t>(k)];
        const FusedBasis f = fuse(site.sectors, prev.basis);
        Matrix m(e.rows() * d, f.basis.total_dimension());
        for (std::size_t q = 0; q < f.basis.size(); ++q)
            for (const auto& p : f.parts[q])
                for (Index ib = 0; ib < p.b_dim; ++ib) {
                    const Matrix v = dense::kron(unit_column(d, site.sectors[p.a_sector].offset),
                                                 column(e, prev.basis[p.b_sector].offset + ib));
                    const Index c = f.basis[q].offset + p.offset + ib;
                    for (Index i = 0; i < v.rows(); ++i) m(i, c) = v(i, 0);
                }
        e = matmul(m, densify(cur.transform));
    }
    return e;
}

// Columns: product-basis image of every wavefunction coefficient.
Matrix embed_layout(const WaveLayout& lay, const Matrix& el, const Matrix& er) {
    const Index d = lay.site().dim();
    Matrix p(el.rows() * d * d * er.rows(), lay.size());
    for (const auto& b : lay.blocks())
        for (Index j = 0; j < b.cols; ++j)
            for (Index i = 0; i < b.rows; ++i) {
                const Matrix v = dense::kron(
                    dense::kron(dense::kron(column(el, lay.left()[b.l].offset + i),
                                            unit_column(d, static_cast<Index>(b.s1))),
                                unit_column(d, static_cast<Index>(b.s2))),
                    column(er, lay.right()[b.r].offset + j));
                const Index c = b.offset + i + j * b.rows;
                for (Index k = 0; k < v.rows(); ++k) p(k, c) = v(k, 0);
            }
    return p;
}

Matrix apply_as_matrix(EffectiveHamiltonian& h, Index n) {
    Matrix out(n, n);
    std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) {
        std::fill(x.begin(), x.end(), 0.0);
        x[static_cast<std::size_t>(k)] = 1.0;
        h.apply(x, y);
        for (Index i = 0; i < n; ++i) out(i, k) = y[static_cast<std::size_t>(i)];
    }
    return out;
}

double sector_ground_energy(const Model& m, QuantumNumber target) {
    const auto states = dense::sector_states(m, target);
    return dense::eigenvalues(dense::hamiltonian(m, states)).front();
}

DmrgConfig config(std::size_t d, int sweeps, std::size_t workers = 1) {
    DmrgConfig c;
    c.bond_dims = {d};
    c.sweeps = sweeps;
    c.workers = workers;
    return c;
}

Model random_fermion_model(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Integrals ints;
    ints.n_modes = n;
    ints.one_body = Matrix(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) ints.one_body(i, j) = ints.one_body(j, i) = u(rng);
    // hermitian two-body part: V_ijkl and V_lkji carry the same value
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    if (std::array{i, j, k, l} > std::array{l, k, j, i}) continue;
                    const double v = 0.3 * u(rng);
                    ints.add_two_body(i, j, k, l, v);
                    if (std::array{i, j, k, l} != std::array{l, k, j, i}) ints.add_two_body(l, k, j, i, v);
                }
    ints.normalize();
    return fermion_model(ints);
}

Model hubbard(int n, double u) {
    ModelParams p;
    p.kind = ModelKind::hubbard_chain;
    p.n = n;
    p.u = u;
    return build_model(p);
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("sdmrg_test_" + name);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

// ---------------------------------------------------------------- Lanczos

TEST(Lanczos, DiagonalOperator) {
    Matrix h(3, 3);
    h(0, 0) = 3.0;
    h(1, 1) = 1.0;
    h(2, 2) = 2.0;
    const std::vector<double> guess(3, 1.0);
    const auto r = lanczos_ground(dense_apply(h), guess);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.energy, 1.0, 1e-12);
    EXPECT_NEAR(std::abs(r.vector[1]), 1.0, 1e-10);
}

TEST(Lanczos, RandomSymmetricMatchesDenseSolver) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix h = random_symmetric(50, rng);
        std::vector<double> guess(50);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (double& g : guess) g = u(rng);
        const auto r = lanczos_ground(dense_apply(h), guess);
        EXPECT_TRUE(r.converged);
        EXPECT_NEAR(r.energy, dense::eigenvalues(h).front(), 1e-10);
        EXPECT_LE(r.residual, 1e-10 * (1.0 + std::abs(r.energy)));
    }
}

TEST(Lanczos, GuessOrthogonalToGroundStateStillConverges) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix h = random_symmetric(40, rng);
        const auto [e0, g] = dense::ground_state(h);
        std::vector<double> guess(40);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (double& x : guess) x = u(rng);
        const double ov = dot(guess, g);
        for (std::size_t i = 0; i < guess.size(); ++i) guess[i] -= ov * g[i];
        LanczosOptions o;
        o.seed = static_cast<std::uint64_t>(trial);
        const auto r = lanczos_ground(dense_apply(h), guess, o);
        EXPECT_NEAR(r.energy, e0, 1e-8) << "trial " << trial;
    }
}

TEST(Lanczos, ZeroGuessRejected) {
    const Matrix h = Matrix::identity(3);
    const std::vector<double> zero(3, 0.0);
    EXPECT_THROW(lanczos_ground(dense_apply(h), zero), LanczosError);
    EXPECT_THROW(lanczos_ground(dense_apply(h), std::span<const double>{}), LanczosError);
}

TEST(Lanczos, IterationLimitReportsNonConvergence) {
    std::mt19937_64 rng(3);
    const Matrix h = random_symmetric(60, rng);
    const std::vector<double> guess(60, 1.0);
    LanczosOptions o;
    o.max_iter = 3;
    const auto r = lanczos_ground(dense_apply(h), guess, o);
    EXPECT_FALSE(r.converged);
    EXPECT_LE(r.iterations, 3);
    EXPECT_GE(r.energy, dense::eigenvalues(h).front() - 1e-12);
}

TEST(Lanczos, DeterministicForSeed) {
    std::mt19937_64 rng(5);
    const Matrix h = random_symmetric(30, rng);
    const std::vector<double> guess(30, 1.0);
    const auto a = lanczos_ground(dense_apply(h), guess);
    const auto b = lanczos_ground(dense_apply(h), guess);
    EXPECT_EQ(a.energy, b.energy);
    EXPECT_EQ(a.vector, b.vector);
}

// ---------------------------------------------------- effective Hamiltonian

namespace {

void check_effective_hamiltonian(const Model& model, int position, std::size_t d) {
    DmrgEngine eng(model, config(d, 1));
    eng.warmup();
    // walk the cursor up to the partition so the left blocks exist
    while (eng.state().cursor.position < position) eng.step();
    const auto& st = eng.state();
    const HamiltonianPlan plan = eng.plan_at(position);
    EffectiveHamiltonian h(plan, eng.pool());
    const Index n = plan.layout->size();
    const Matrix heff = apply_as_matrix(h, n);

    const Matrix el = embed_left(st, model.site, position);
    const Matrix er = embed_right(st, model.site, position + 2);
    const Matrix p = embed_layout(*plan.layout, el, er);
    const Matrix hfull = dense::hamiltonian(model);
    const Matrix proj = matmul(matmul(p.transposed(), hfull), p);
    EXPECT_LT(max_abs_diff(heff, proj), 1e-12 * (1.0 + hfull.max_abs()));

    // exact blocks: the two-site space holds the whole target sector
    const auto states = dense::sector_states(model, st.target);
    ASSERT_EQ(n, static_cast<Index>(states.size()));
    const auto [e0, g_sector] = dense::ground_state(dense::hamiltonian(model, states));
    std::vector<double> g(static_cast<std::size_t>(hfull.rows()), 0.0);
    for (std::size_t i = 0; i < states.size(); ++i) g[static_cast<std::size_t>(states[i])] = g_sector[i];
    std::vector<double> psi(static_cast<std::size_t>(n), 0.0), hpsi(psi.size());
    for (Index c = 0; c < n; ++c)
        for (Index k = 0; k < p.rows(); ++k) psi[static_cast<std::size_t>(c)] += p(k, c) * g[static_cast<std::size_t>(k)];
    EXPECT_NEAR(std::sqrt(dot(psi, psi)), 1.0, 1e-12);
    h.apply(psi, hpsi);
    double dev = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) dev = std::max(dev, std::abs(hpsi[i] - e0 * psi[i]));
    EXPECT_LT(dev, 1e-10 * std::abs(e0));

    // <psi|H|psi> through the plan and through the dense matrix
    std::vector<double> hg(g.size());
    dense_apply(hfull)(g, hg);
    EXPECT_NEAR(dot(psi, hpsi), dot(g, hg), 1e-10 * std::abs(e0));
}

}  // namespace

TEST(EffectiveHamiltonian, HeisenbergFourSitesEveryPartition) {
    for (int s = 0; s <= 2; ++s) check_effective_hamiltonian(heisenberg_chain(4, 1.0), s, 16);
}

TEST(EffectiveHamiltonian, HubbardFourSitesEveryPartition) {
    for (int s = 0; s <= 2; ++s) check_effective_hamiltonian(hubbard(4, 4.0), s, 256);
}

TEST(EffectiveHamiltonian, RandomIntegralsFourOrbitals) {
    for (int s = 0; s <= 2; ++s) check_effective_hamiltonian(random_fermion_model(4, 99), s, 256);
}

TEST(EffectiveHamiltonian, ZeroInZeroOut) {
    DmrgEngine eng(heisenberg_chain(6, 1.0), config(8, 1));
    eng.warmup();
    const HamiltonianPlan plan = eng.plan_at(0);
    EffectiveHamiltonian h(plan, eng.pool());
    std::vector<double> x(static_cast<std::size_t>(plan.layout->size()), 0.0), y(x.size(), 1.0);
    h.apply(x, y);
    for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(EffectiveHamiltonian, WorkerCountDoesNotChangeResult) {
    const Model m = heisenberg_chain(8, 1.0);
    DmrgEngine eng(m, config(16, 1));
    eng.warmup();
    const HamiltonianPlan plan = eng.plan_at(0);
    std::vector<double> x(static_cast<std::size_t>(plan.layout->size()));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : x) v = u(rng);
    std::vector<double> serial(x.size());
    EffectiveHamiltonian(plan, nullptr).apply(x, serial);
    for (std::size_t w : {1u, 2u, 4u}) {
        mazerunner::RunnerPool pool(w);
        std::vector<double> y(x.size());
        EffectiveHamiltonian(plan, &pool).apply(x, y);
        for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], serial[i], 1e-12 * (1.0 + std::abs(serial[i])));
    }
}

TEST(EffectiveHamiltonian, PlanBatchesShareOneInputBlock) {
    DmrgEngine eng(heisenberg_chain(8, 1.0), config(16, 1));
    eng.warmup();
    const HamiltonianPlan plan = eng.plan_at(0);
    for (std::size_t in = 0; in < plan.by_input.size(); ++in)
        for (std::size_t k : plan.by_input[in]) {
            const auto& b = plan.batches[k];
            EXPECT_EQ(b.in_block, in);
            const auto& wi = plan.layout->blocks()[b.in_block];
            const auto& wo = plan.layout->blocks()[b.out_block];
            EXPECT_EQ(b.m, wi.rows);
            EXPECT_EQ(b.n, wi.cols);
            EXPECT_EQ(b.q, wo.rows);
            EXPECT_EQ(b.r, wo.cols);
            EXPECT_GE(b.p, 1);
        }
}

// ---------------------------------------------------------- renormalization

TEST(Renormalize, DensityMatrixHasUnitTrace) {
    DmrgEngine eng(heisenberg_chain(8, 1.0), config(16, 1));
    eng.warmup();
    const HamiltonianPlan plan = eng.plan_at(0);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Wavefunction psi = random_wavefunction(plan.layout, seed);
        for (Side side : {Side::left, Side::right}) {
            const auto sel = select_states(reduced_density_matrix(psi, side), 4);
            double tr = 0.0;
            for (double w : sel.spectrum) tr += w;
            EXPECT_NEAR(tr, 1.0, 1e-12);
            EXPECT_GE(sel.truncation_error, 0.0);
            EXPECT_LE(sel.truncation_error, 1.0);
        }
    }
}

TEST(Renormalize, NoTruncationGivesUnitaryEquivalentOperators) {
    const Model m = heisenberg_chain(6, 1.0);
    DmrgEngine eng(m, config(64, 1));
    eng.warmup();
    const HamiltonianPlan plan = eng.plan_at(0);
    const Wavefunction psi = random_wavefunction(plan.layout, 3);
    const auto& l0 = *eng.state().left[0];
    const auto rr = renormalize(psi, Side::left, l0, eng.mpo(), 64, eng.pool(), 0);
    EXPECT_EQ(rr.selection.truncation_error, 0.0);
    const EnlargedBlock enl = enlarge(l0, eng.mpo());
    const Matrix u = densify(rr.block.transform);
    ASSERT_EQ(u.rows(), u.cols());
    EXPECT_LT(max_abs_diff(matmul(u.transposed(), u), Matrix::identity(u.rows())), 1e-12);
    for (std::size_t a = 0; a < enl.ops.size(); ++a) {
        const Matrix back = matmul(matmul(u, densify(rr.block.ops[a])), u.transposed());
        EXPECT_LT(max_abs_diff(back, densify(enl.ops[a])), 1e-12);
    }
}

TEST(Renormalize, TruncationErrorMatchesDenseDensityMatrix) {
    const Model m = heisenberg_chain(4, 1.0);
    DmrgEngine eng(m, config(16, 1));
    eng.warmup();
    eng.step();  // builds L_1 exactly
    const auto& st = eng.state();
    const HamiltonianPlan plan = eng.plan_at(1);
    const Matrix p = embed_layout(*plan.layout, embed_left(st, m.site, 1), embed_right(st, m.site, 3));
    const auto states = dense::sector_states(m, st.target);
    const auto [e0, gs] = dense::ground_state(dense::hamiltonian(m, states));
    std::vector<double> g(16, 0.0);
    for (std::size_t i = 0; i < states.size(); ++i) g[static_cast<std::size_t>(states[i])] = gs[i];
    Wavefunction psi(plan.layout);
    for (Index c = 0; c < p.cols(); ++c)
        for (Index k = 0; k < p.rows(); ++k) psi.data[static_cast<std::size_t>(c)] += p(k, c) * g[static_cast<std::size_t>(k)];

    // dense RDM of sites {0, 1}: reshape g into 4 x 4, rho = G G^T
    Matrix gm(4, 4);
    for (Index x = 0; x < 16; ++x) gm(x / 4, x % 4) = g[static_cast<std::size_t>(x)];
    auto rho = dense::eigenvalues(matmul(gm, gm.transposed()));
    std::sort(rho.rbegin(), rho.rend());
    for (std::size_t keep : {1u, 2u, 3u}) {
        const auto rr = renormalize(psi, Side::left, *st.left[1], eng.mpo(), keep, eng.pool(), 0);
        double tail = 0.0;
        for (std::size_t i = keep; i < rho.size(); ++i) tail += rho[i];
        EXPECT_NEAR(rr.selection.truncation_error, tail, 1e-12) << "D = " << keep;
        EXPECT_EQ(rr.block.basis.total_dimension(), static_cast<Index>(keep));
    }
}

TEST(Renormalize, DegenerateBoundaryTieBreakIsDeterministic) {
    // two sectors with identical weights: the smaller label wins
    SectorBasis b({{QuantumNumber(0, -1), 1}, {QuantumNumber(0, 1), 1}});
    SectorMatrix rho(b, b, QuantumNumber{});
    rho.block({QuantumNumber(0, -1), QuantumNumber(0, -1)})(0, 0) = 0.5;
    rho.block({QuantumNumber(0, 1), QuantumNumber(0, 1)})(0, 0) = 0.5;
    const auto sel = select_states(rho, 1);
    ASSERT_EQ(sel.truncation.basis.size(), 1u);
    EXPECT_EQ(sel.truncation.basis[0].qn, QuantumNumber(0, -1));
    EXPECT_NEAR(sel.truncation_error, 0.5, 1e-15);
}

TEST(Renormalize, ArenaTooSmallIsRejectedUpfront) {
    DmrgEngine eng(heisenberg_chain(6, 1.0), config(16, 1));
    eng.warmup();
    const HamiltonianPlan plan = eng.plan_at(0);
    const Wavefunction psi = random_wavefunction(plan.layout, 1);
    EXPECT_THROW(renormalize(psi, Side::left, *eng.state().left[0], eng.mpo(), 16, eng.pool(), 8),
                 ttcache::CapacityExceeded);
}

// ------------------------------------------------------------------ warmup

TEST(Warmup, FourSitesExact) {
    const Model m = heisenberg_chain(4, 1.0);
    DmrgEngine eng(m, config(4, 1));
    const double e = eng.warmup();
    const double e0 = sector_ground_energy(m, m.default_target());
    EXPECT_NEAR(e, e0, 1e-10 * (1.0 + std::abs(e0)));
}

TEST(Warmup, SingleStateIsVariational) {
    const Model m = heisenberg_chain(8, 1.0);
    DmrgEngine eng(m, config(1, 1));
    const double e = eng.warmup();
    EXPECT_GE(e, sector_ground_energy(m, m.default_target()) - 1e-10);
    EXPECT_NO_THROW(eng.run());
}

TEST(Warmup, RepeatableBitwise) {
    const Model m = heisenberg_chain(10, 1.0);
    DmrgEngine a(m, config(16, 1)), b(m, config(16, 1));
    EXPECT_EQ(a.warmup(), b.warmup());
    EXPECT_EQ(a.state().warmup_energies, b.state().warmup_energies);
}

// ------------------------------------------------------------------ sweeps

TEST(Sweep, HeisenbergEightSites) {
    const Model m = heisenberg_chain(8, 1.0);
    DmrgEngine eng(m, config(16, 3));
    eng.run();
    const double e0 = sector_ground_energy(m, m.default_target());
    EXPECT_LE(std::abs(eng.energy() - e0), 1e-8 * std::abs(e0));
    for (const auto& r : eng.records()) EXPECT_GE(r.energy, e0 - 1e-10 * std::abs(e0));
}

TEST(Sweep, HeisenbergTwelveSitesReachesExactEnergy) {
    const Model m = heisenberg_chain(12, 1.0);
    DmrgEngine eng(m, config(64, 3));
    eng.run();
    const auto states = dense::sector_states(m, m.default_target());
    ASSERT_EQ(states.size(), 924u);
    const double e0 = dense::eigenvalues(dense::hamiltonian(m, states)).front();
    EXPECT_LE(std::abs(eng.energy() - e0), 1e-10 * std::abs(e0));
}

TEST(Sweep, EnergiesDoNotIncreaseBetweenSweeps) {
    const Model m = heisenberg_chain(12, 1.0);
    DmrgConfig c = config(8, 4);
    c.bond_dims = {4, 8, 12, 16};
    DmrgEngine eng(m, c);
    eng.run();
    const auto e = eng.sweep_energies();
    ASSERT_EQ(e.size(), 4u);
    for (std::size_t k = 1; k < e.size(); ++k) EXPECT_LE(e[k], e[k - 1] + 1e-9);
}

TEST(Sweep, TruncationErrorShrinksWithBondDimension) {
    const Model m = heisenberg_chain(12, 1.0);
    auto worst = [&](std::size_t d) {
        DmrgEngine eng(m, config(d, 2));
        eng.run();
        double w = 0.0;
        for (const auto& r : eng.records()) {
            EXPECT_GE(r.truncation_error, 0.0);
            EXPECT_LE(r.truncation_error, 1.0);
            if (r.sweep == 1) w = std::max(w, r.truncation_error);
        }
        return w;
    };
    const double e8 = worst(8), e16 = worst(16);
    EXPECT_LE(e16, 10.0 * e8);
    EXPECT_LT(e16, e8);
}

TEST(Sweep, WorkerCountIndependence) {
    const Model m = heisenberg_chain(10, 1.0);
    std::vector<double> finals;
    for (std::size_t w : {1u, 2u, 4u}) {
        DmrgEngine eng(m, config(32, 2, w));
        eng.run();
        finals.push_back(eng.energy());
    }
    for (double e : finals) EXPECT_LE(std::abs(e - finals[0]), 1e-10 * std::abs(finals[0]));
}

TEST(Sweep, HubbardSixSitesHalfFilling) {
    const Model m = hubbard(6, 4.0);
    DmrgEngine eng(m, config(128, 3));
    eng.run();
    const double e0 = sector_ground_energy(m, m.default_target());
    EXPECT_LE(std::abs(eng.energy() - e0), 1e-9 * std::abs(e0));
}

TEST(Sweep, RandomIntegralsFiveOrbitals) {
    const Model m = random_fermion_model(5, 2024);
    DmrgConfig c = config(256, 3);
    c.target = QuantumNumber(4, 0);
    DmrgEngine eng(m, c);
    eng.run();
    const double e0 = sector_ground_energy(m, QuantumNumber(4, 0));
    EXPECT_LE(std::abs(eng.energy() - e0), 1e-9 * (1.0 + std::abs(e0)));
}

TEST(Sweep, TwoSiteChain) {
    const Model m = heisenberg_chain(2, 1.0);
    DmrgEngine eng(m, config(4, 2));
    eng.run();
    EXPECT_NEAR(eng.energy(), -0.75, 1e-12);
    EXPECT_EQ(eng.sweep_energies().size(), 2u);
}

TEST(Sweep, BlocksRespectSelectionRule) {
    const Model m = heisenberg_chain(8, 1.0);
    DmrgEngine eng(m, config(12, 2));
    eng.run();
    const auto& st = eng.state();
    for (const auto* side : {&st.left, &st.right})
        for (const auto& b : *side) {
            if (!b) continue;
            EXPECT_LE(b->basis.total_dimension(), 12);
            for (const auto& op : b->ops) {
                EXPECT_NO_THROW(op.validate());
                EXPECT_EQ(op.row_basis(), b->basis);
                EXPECT_EQ(op.col_basis(), b->basis);
            }
            if (b->has_transform) EXPECT_NO_THROW(b->transform.validate());
        }
    ASSERT_TRUE(st.guess.has_value());
    const auto& lay = *st.guess->layout;
    for (const auto& blk : lay.blocks())
        EXPECT_EQ(lay.left()[blk.l].qn + lay.site().state_qn(static_cast<Index>(blk.s1)) +
                      lay.site().state_qn(static_cast<Index>(blk.s2)) + lay.right()[blk.r].qn,
                  st.target);
}

TEST(Sweep, FlopEstimateMatchesKernelCounter) {
    const Model m = heisenberg_chain(8, 1.0);
    DmrgEngine eng(m, config(16, 1));
    eng.warmup();
    for (int k = 0; k < 2 * (8 - 1); ++k) {
        const auto before = kernels::kernel_snapshot();
        const SweepRecord r = eng.step();
        const auto delta = kernels::kernel_snapshot() - before;
        EXPECT_EQ(r.flops, delta.flops) << "step " << k;
        EXPECT_GT(r.flops, 0u);
    }
}

TEST(Sweep, FlopCountArithmetic) {
    EXPECT_EQ(kernels::gemm_flops(2, 2, 2), 16u);
    EXPECT_EQ(sbmm4s::flop_count(2, 2, 2, 2, 3), 96u);
}

TEST(Sweep, ConfigValidation) {
    const Model m = heisenberg_chain(4, 1.0);
    DmrgConfig c = config(4, 1);
    c.bond_dims = {0};
    EXPECT_THROW((void)DmrgEngine(m, c), DmrgError);
    c = config(4, 1);
    c.lanczos.tol = 0.0;
    EXPECT_THROW((void)DmrgEngine(m, c), DmrgError);
    c = config(4, 1);
    c.workers = 0;
    EXPECT_THROW((void)DmrgEngine(m, c), DmrgError);
}

// --------------------------------------------------------------- checkpoint

TEST(Checkpoint, ResumeAfterWarmupReproducesEnergies) {
    const Model m = heisenberg_chain(10, 1.0);
    const auto path = temp_path("warm.ckpt");
    DmrgEngine a(m, config(24, 3));
    a.warmup();
    a.save_checkpoint(path);
    a.run();
    DmrgEngine b = DmrgEngine::resume(m, config(24, 3), path);
    b.run();
    ASSERT_EQ(a.records().size(), b.records().size());
    for (std::size_t i = 0; i < a.records().size(); ++i)
        EXPECT_NEAR(a.records()[i].energy, b.records()[i].energy, 1e-12 * std::abs(a.records()[i].energy));
    std::filesystem::remove(path);
}

TEST(Checkpoint, ResumeMidSweepReproducesEnergies) {
    const Model m = heisenberg_chain(10, 1.0);
    const auto path = temp_path("mid.ckpt");
    DmrgEngine a(m, config(16, 2));
    a.warmup();
    for (int k = 0; k < 11; ++k) a.step();
    a.save_checkpoint(path);
    a.run();
    DmrgEngine b = DmrgEngine::resume(m, config(16, 2), path);
    b.run();
    ASSERT_EQ(a.records().size(), b.records().size());
    for (std::size_t i = 0; i < a.records().size(); ++i)
        EXPECT_NEAR(a.records()[i].energy, b.records()[i].energy, 1e-12 * std::abs(a.records()[i].energy));
    std::filesystem::remove(path);
}

TEST(Checkpoint, ResaveIsByteIdentical) {
    const Model m = heisenberg_chain(8, 1.0);
    const auto p1 = temp_path("a.ckpt"), p2 = temp_path("b.ckpt");
    DmrgEngine a(m, config(8, 1));
    a.run();
    a.save_checkpoint(p1);
    DmrgEngine b = DmrgEngine::resume(m, config(8, 1), p1);
    EXPECT_TRUE(b.state() == a.state());
    b.save_checkpoint(p2);
    EXPECT_EQ(read_bytes(p1), read_bytes(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST(Checkpoint, TruncatedOrDamagedFileIsCorrupt) {
    const Model m = heisenberg_chain(6, 1.0);
    DmrgEngine a(m, config(8, 1));
    a.warmup();
    const auto bytes = encode_checkpoint(a.state());
    for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
        std::vector<std::uint8_t> t(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_THROW(decode_checkpoint(t, m.site), CheckpointCorrupt) << "cut at " << cut;
    }
    std::mt19937_64 rng(9);
    for (int k = 0; k < 20; ++k) {
        auto flipped = bytes;
        const auto pos = std::uniform_int_distribution<std::size_t>(12, bytes.size() - 1)(rng);
        flipped[pos] ^= 0x10;
        EXPECT_THROW(decode_checkpoint(flipped, m.site), CheckpointCorrupt) << "flip at " << pos;
    }
    auto wrong_version = bytes;
    wrong_version[8] = 99;
    EXPECT_THROW(decode_checkpoint(wrong_version, m.site), CheckpointVersionError);
}

TEST(Checkpoint, DifferentHamiltonianRejected) {
    const auto path = temp_path("other.ckpt");
    DmrgEngine a(heisenberg_chain(6, 1.0), config(8, 1));
    a.warmup();
    a.save_checkpoint(path);
    EXPECT_THROW(DmrgEngine::resume(heisenberg_chain(6, 0.5), config(8, 1), path), CheckpointError);
    std::filesystem::remove(path);
}

TEST(Checkpoint, FailedIterationWritesCheckpoint) {
    const Model m = heisenberg_chain(6, 1.0);
    const auto good = temp_path("good.ckpt"), fail = temp_path("fail.ckpt");
    std::filesystem::remove(fail);
    DmrgEngine a(m, config(16, 1));
    a.warmup();
    a.save_checkpoint(good);
    DmrgConfig tiny = config(16, 1);
    tiny.arena_bytes = 16;  // renormalization cannot stage its operators
    tiny.checkpoint_path = fail.string();
    DmrgEngine b = DmrgEngine::resume(m, tiny, good);
    EXPECT_THROW(b.step(), ttcache::CapacityExceeded);
    ASSERT_TRUE(std::filesystem::exists(fail));
    DmrgEngine c = DmrgEngine::resume(m, config(16, 1), fail);
    EXPECT_EQ(c.state().cursor, a.state().cursor);
    std::filesystem::remove(good);
    std::filesystem::remove(fail);
}
