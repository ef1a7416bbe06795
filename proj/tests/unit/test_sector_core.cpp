#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <cfloat>
#include <numeric>
#include <random>

#include "sdmrg/core/hilbert.hpp"
#include "sdmrg/core/sector_ops.hpp"
#include "test_support.hpp"

namespace sdmrg {
namespace {

using testing::frobenius;
using testing::frobenius_diff;
using testing::naive_kron;
using testing::naive_multiply;

SectorBasis two_sector_basis() { return SectorBasis({{QuantumNumber(0), 1}, {QuantumNumber(1), 1}}); }

TEST(QuantumNumber, FusionIsComponentwiseAndLexOrdered) {
    const QuantumNumber a(1, -1), b(2, 3), c(-4, 1);
    EXPECT_EQ(a + b, QuantumNumber(3, 2));
    EXPECT_EQ((a + b) + c, a + (b + c));
    EXPECT_EQ(a + b, b + a);
    EXPECT_LT(QuantumNumber(0, 5), QuantumNumber(1, -5));
    EXPECT_LT(QuantumNumber(1, -1), QuantumNumber(1, 1));
}

TEST(SectorBasis, SortsAndAssignsOffsets) {
    SectorBasis b({{QuantumNumber(2), 3}, {QuantumNumber(0), 1}, {QuantumNumber(1), 2}});
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b[0].qn, QuantumNumber(0));
    EXPECT_EQ(b[1].offset, 1);
    EXPECT_EQ(b[2].offset, 3);
    EXPECT_EQ(b.total_dimension(), 6);
    EXPECT_EQ(b.dim(QuantumNumber(5)), 0);
}

TEST(SectorBasis, RejectsDuplicatesAndEmptySectors) {
    EXPECT_THROW(SectorBasis({{QuantumNumber(0), 1}, {QuantumNumber(0), 2}}), SectorError);
    EXPECT_THROW(SectorBasis({{QuantumNumber(0), 0}}), SectorError);
}

TEST(SectorMatrix, BlockOutsideSelectionRuleThrows) {
    SectorMatrix m(two_sector_basis(), two_sector_basis(), QuantumNumber(1));
    EXPECT_NO_THROW(m.block({QuantumNumber(1), QuantumNumber(0)}));
    EXPECT_THROW(m.block({QuantumNumber(0), QuantumNumber(0)}), SelectionRuleError);
}

TEST(SectorTable, DiagonalTimesDiagonalStaysDiagonal) {
    const auto b = two_sector_basis();
    const auto s = SectorStructure::full(b, b, QuantumNumber(0));
    const auto t = sector_table(s, s, OpKind::multiply);
    const std::vector<BlockKey> want{{QuantumNumber(0), QuantumNumber(0)},
                                     {QuantumNumber(1), QuantumNumber(1)}};
    EXPECT_EQ(t.outputs, want);
}

TEST(SectorTable, CreationTimesAnnihilationMatchesBruteForce) {
    SectorBasis b({{QuantumNumber(0), 2}, {QuantumNumber(1), 3}, {QuantumNumber(2), 1},
                   {QuantumNumber(4), 2}});
    const auto cre = SectorStructure::full(b, b, QuantumNumber(1));
    const auto ann = SectorStructure::full(b, b, QuantumNumber(-1));
    const auto t = sector_table(cre, ann, OpKind::multiply);
    EXPECT_EQ(t.delta, QuantumNumber(0));
    // brute force over every (row, inner, col) label triple
    std::set<BlockKey> want;
    for (const auto& r : b.entries())
        for (const auto& k : b.entries())
            for (const auto& c : b.entries())
                if (r.qn == k.qn + QuantumNumber(1) && k.qn == c.qn + QuantumNumber(-1))
                    want.insert({r.qn, c.qn});
    EXPECT_EQ(std::set<BlockKey>(t.outputs.begin(), t.outputs.end()), want);
    EXPECT_EQ(want.size(), 2u);  // labels 0 and 1 only
}

TEST(SectorTable, FermionCreationPairHasSingleOutput) {
    const auto site = testing::fermion_site_basis();
    const auto up = testing::from_dense(testing::dense_cdag_up(), site, site, QuantumNumber(1, 1));
    const auto dn = testing::from_dense(testing::dense_cdag_dn(), site, site, QuantumNumber(1, -1));
    const auto st = sector_table(SectorStructure::of(up), SectorStructure::of(dn), OpKind::multiply);
    ASSERT_EQ(st.outputs.size(), 1u);
    EXPECT_EQ(st.outputs[0], (BlockKey{QuantumNumber(2, 0), QuantumNumber(0, 0)}));

    const auto dense = naive_multiply(testing::dense_cdag_up(), testing::dense_cdag_dn());
    const auto keys = testing::nonzero_keys(dense, site, site);
    EXPECT_EQ(std::set<BlockKey>(st.outputs.begin(), st.outputs.end()), keys);

    const auto tt = task_table(up, dn, OpKind::multiply);
    EXPECT_EQ(tt.tasks.size(), 1u);
}

TEST(TaskTable, IdentityTimesIdentity) {
    const auto id = SectorMatrix::identity(two_sector_basis());
    const auto t = task_table(id, id, OpKind::multiply);
    ASSERT_EQ(t.tasks.size(), 2u);
    for (const auto& r : t.tasks) EXPECT_EQ(r.weight, 1.0);
}

TEST(TaskTable, AbsentBlockOmitsTask) {
    const auto a = SectorMatrix::identity(two_sector_basis());
    SectorMatrix b(two_sector_basis(), two_sector_basis(), QuantumNumber(0));
    b.block({QuantumNumber(1), QuantumNumber(1)})(0, 0) = 2.0;
    const auto t = task_table(a, b, OpKind::multiply);
    ASSERT_EQ(t.tasks.size(), 1u);
    EXPECT_EQ(t.tasks[0].out, (BlockKey{QuantumNumber(1), QuantumNumber(1)}));
}

TEST(TaskTable, MultiplyInnerBasisMismatchThrows) {
    const auto a = SectorMatrix::identity(two_sector_basis());
    const auto b = SectorMatrix::identity(SectorBasis({{QuantumNumber(0), 2}}));
    EXPECT_THROW(task_table(a, b, OpKind::multiply), BasisMismatch);
    EXPECT_THROW(sector_table(SectorStructure::of(a), SectorStructure::of(b), OpKind::multiply),
                 BasisMismatch);
}

TEST(ExecuteTasks, EmptyTableLeavesOutputUnchanged) {
    std::mt19937_64 rng(1);
    const auto b = two_sector_basis();
    auto out = testing::random_dense_filled(b, b, QuantumNumber(0), rng);
    const auto before = out;
    TaskTable empty;
    empty.rows = b;
    empty.cols = b;
    execute_tasks(empty, out, out, out);
    EXPECT_EQ(out, before);
}

TEST(ExecuteTasks, RandomMultiplyMatchesDense) {
    std::mt19937_64 rng(7);
    SectorBasis b({{QuantumNumber(0), 2}, {QuantumNumber(1), 2}});
    const auto x = testing::random_dense_filled(b, b, QuantumNumber(0), rng);
    const auto y = testing::random_dense_filled(b, b, QuantumNumber(0), rng);
    const auto z = multiply(x, y);
    const auto ref = naive_multiply(densify(x), densify(y));
    EXPECT_LE(frobenius_diff(densify(z), ref), 1e-12 * frobenius(ref));
}

TEST(ExecuteTasks, KronOfNumberOperatorsMatchesDenseKron) {
    const auto site = testing::fermion_site_basis();
    Matrix n(4, 4);
    n(1, 1) = 1.0;
    n(2, 2) = 1.0;
    n(3, 3) = 2.0;
    const auto ns = testing::from_dense(n, site, site, QuantumNumber(0, 0));
    const auto k = kron(ns, ns);
    const auto pr = kron_permutation(site, site);
    const auto ref = testing::to_fused_order(naive_kron(n, n), pr, pr);
    EXPECT_EQ(max_abs_diff(densify(k), ref), 0.0);
}

TEST(ExecuteTasks, WrongShapedBlockReportsCorruptTable) {
    const auto id = SectorMatrix::identity(two_sector_basis());
    auto t = task_table(id, id, OpKind::multiply);
    SectorMatrix bad(SectorBasis({{QuantumNumber(0), 2}, {QuantumNumber(1), 1}}),
                     SectorBasis({{QuantumNumber(0), 2}, {QuantumNumber(1), 1}}), QuantumNumber(0));
    bad.block({QuantumNumber(0), QuantumNumber(0)});
    bad.block({QuantumNumber(1), QuantumNumber(1)});
    auto out = make_accumulator(t);
    EXPECT_THROW(execute_tasks(t, bad, id, out), SectorError);
}

TEST(FullFormCheck, IdentityDensifiesToIdentity) {
    SectorBasis b({{QuantumNumber(0), 2}, {QuantumNumber(1), 3}});
    const auto chk = full_form_check(SectorMatrix::identity(b));
    EXPECT_EQ(chk.dense, Matrix::identity(5));
    EXPECT_EQ(chk.max_abs_deviation, 0.0);
}

TEST(FullFormCheck, RandomMultiplyDeviationSmall) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto b = testing::random_basis(rng);
        const QuantumNumber d(0, 0);
        const auto x = testing::random_dense_filled(b, b, d, rng);
        const auto y = testing::random_dense_filled(b, b, d, rng);
        const auto t = task_table(x, y, OpKind::multiply);
        auto out = make_accumulator(t);
        execute_tasks(t, x, y, out);
        const auto chk = full_form_check(t, x, y, out);
        EXPECT_LE(chk.max_abs_deviation, 1e-12 * (1.0 + chk.dense.max_abs()));
    }
}

TEST(FullFormCheck, CorruptedBlockIsReported) {
    std::mt19937_64 rng(3);
    SectorBasis b({{QuantumNumber(0), 2}, {QuantumNumber(1), 2}});
    const auto x = testing::random_dense_filled(b, b, QuantumNumber(0), rng);
    const auto y = testing::random_dense_filled(b, b, QuantumNumber(0), rng);
    const auto t = task_table(x, y, OpKind::multiply);
    auto out = make_accumulator(t);
    execute_tasks(t, x, y, out);
    out.block({QuantumNumber(1), QuantumNumber(1)})(0, 1) += 1e-6;
    EXPECT_GT(full_form_check(t, x, y, out).max_abs_deviation, 1e-7);
}

TEST(FullFormCheck, GuardTrips) {
    SectorBasis big({{QuantumNumber(0), 5000}});
    SectorMatrix m(big, big, QuantumNumber(0));
    EXPECT_THROW(densify(m), DensifyGuardError);
}

TEST(HilbertDimension, KnownValues) {
    EXPECT_EQ(hilbert_dimension(18, 18), BigInt("9075135300"));
    EXPECT_EQ(hilbert_dimension(1, 0), BigInt(1));
    const std::string big = hilbert_dimension(54, 54).str();
    EXPECT_EQ(big.size(), 32u);
    EXPECT_EQ(big.substr(0, 4), "2485");
    EXPECT_THROW(hilbert_dimension(2, 5), std::out_of_range);
    EXPECT_THROW(hilbert_dimension(2, -1), std::out_of_range);
}

// ---- properties on random operands ----

QuantumNumber random_delta(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> d(-1, 1);
    return QuantumNumber(d(rng), 0);
}

TEST(SectorProperties, MultiplyOracleAndSelectionRule) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const auto r = testing::random_basis(rng), k = testing::random_basis(rng),
                   c = testing::random_basis(rng);
        const auto x = testing::random_dense_filled(r, k, random_delta(rng), rng);
        const auto y = testing::random_dense_filled(k, c, random_delta(rng), rng);
        const auto z = multiply(x, y);
        z.validate();
        for (const auto& [key, blk] : z.blocks()) EXPECT_EQ(key.row - key.col, z.delta());
        const auto ref = naive_multiply(densify(x), densify(y));
        EXPECT_LE(frobenius_diff(densify(z), ref), 1e-12 * std::max(1.0, frobenius(ref)));
        const auto st = sector_table(SectorStructure::of(x), SectorStructure::of(y), OpKind::multiply);
        EXPECT_EQ(std::set<BlockKey>(st.outputs.begin(), st.outputs.end()),
                  testing::nonzero_keys(ref, r, c));
    }
}

TEST(SectorProperties, TransposedMultiplyMatchesDense) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto r = testing::random_basis(rng), k = testing::random_basis(rng),
                   c = testing::random_basis(rng);
        const auto x = testing::random_dense_filled(k, r, random_delta(rng), rng);  // used as x^T
        const auto y = testing::random_dense_filled(c, k, random_delta(rng), rng);  // used as y^T
        const auto z = multiply(x, y, {true, true, 0.5});
        const auto ref = naive_multiply(densify(x).transposed(), densify(y).transposed());
        Matrix scaled = ref;
        for (double& v : scaled.values()) v *= 0.5;
        EXPECT_LE(frobenius_diff(densify(z), scaled), 1e-12 * std::max(1.0, frobenius(scaled)));
    }
}

TEST(SectorProperties, KronOracleAndSectorTable) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto ra = testing::random_basis(rng, 3, 3), ca = testing::random_basis(rng, 3, 3);
        const auto rb = testing::random_basis(rng, 3, 3), cb = testing::random_basis(rng, 3, 3);
        const auto x = testing::random_dense_filled(ra, ca, random_delta(rng), rng);
        const auto y = testing::random_dense_filled(rb, cb, random_delta(rng), rng);
        const auto z = kron(x, y);
        z.validate();
        const auto ref = testing::to_fused_order(naive_kron(densify(x), densify(y)),
                                                 kron_permutation(ra, rb), kron_permutation(ca, cb));
        EXPECT_LE(frobenius_diff(densify(z), ref), 1e-12 * std::max(1.0, frobenius(ref)));
        const auto st = sector_table(SectorStructure::of(x), SectorStructure::of(y), OpKind::kron);
        EXPECT_EQ(std::set<BlockKey>(st.outputs.begin(), st.outputs.end()),
                  testing::nonzero_keys(ref, z.row_basis(), z.col_basis()));
    }
}

TEST(SectorProperties, AddMatchesDense) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const auto r = testing::random_basis(rng), c = testing::random_basis(rng);
        const auto d = random_delta(rng);
        const auto x = testing::random_dense_filled(r, c, d, rng);
        const auto y = testing::random_dense_filled(r, c, d, rng);
        const auto z = add(x, y, -0.25);
        const auto dx = densify(x), dy = densify(y);
        Matrix ref(dx.rows(), dx.cols());
        for (Index i = 0; i < ref.size(); ++i) ref.data()[i] = dx.data()[i] - 0.25 * dy.data()[i];
        EXPECT_LE(max_abs_diff(densify(z), ref), 1e-15);
    }
}

TEST(SectorProperties, TaskOrderPermutationsAgree) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const auto r = testing::random_basis(rng), k = testing::random_basis(rng),
                   c = testing::random_basis(rng);
        const auto d = random_delta(rng);
        const bool use_add = trial % 2 == 0;
        const auto x = testing::random_dense_filled(r, use_add ? c : k, d, rng);
        const auto y = use_add ? testing::random_dense_filled(r, c, d, rng)
                               : testing::random_dense_filled(k, c, random_delta(rng), rng);
        const auto t = task_table(x, y, use_add ? OpKind::add : OpKind::multiply, {false, false, 0.75});
        std::map<BlockKey, int> addends;
        for (const auto& row : t.tasks) ++addends[row.out];
        std::vector<std::size_t> order(t.tasks.size());
        std::iota(order.begin(), order.end(), 0);
        auto ref = make_accumulator(t);
        execute_rows(t, order, x, y, ref);
        for (int perm = 0; perm < 5; ++perm) {
            std::shuffle(order.begin(), order.end(), rng);
            auto out = make_accumulator(t);
            execute_rows(t, order, x, y, out);
            for (const auto& [key, blk] : ref.blocks()) {
                const Matrix* o = out.find(key);
                ASSERT_NE(o, nullptr);
                // operands lie in [-1, 1]; each addend is bounded by its inner length
                const double bound = use_add ? 1.0 : static_cast<double>(k.total_dimension());
                EXPECT_LE(max_abs_diff(blk, *o), 8.0 * DBL_EPSILON * addends[key] * bound);
            }
        }
    }
}

}  // namespace
}  // namespace sdmrg
