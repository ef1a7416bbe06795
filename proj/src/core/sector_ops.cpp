#include "sdmrg/core/sector_ops.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sdmrg/sbmm4s/gemm.hpp"

namespace sdmrg {
namespace {

struct Oriented {
    const SectorBasis* rows;
    const SectorBasis* cols;
    QuantumNumber delta;
};

Oriented orient(const SectorStructure& s, bool transpose) {
    if (transpose) return {&s.cols, &s.rows, -s.delta};
    return {&s.rows, &s.cols, s.delta};
}

BlockKey orient_key(const BlockKey& k, bool transpose) {
    return transpose ? BlockKey{k.col, k.row} : k;
}

void require_same(const SectorBasis& x, const SectorBasis& y, const char* what) {
    if (!(x == y)) throw BasisMismatch(std::string("basis mismatch: ") + what);
}

// Enumerates (a-key, b-key, out-key, row offset, col offset) for the operation.
template <class Fn>
void enumerate(const SectorStructure& a, const SectorStructure& b, OpKind kind,
               const OperandOptions& opts, const FusedBasis* frows, const FusedBasis* fcols,
               Fn&& emit) {
    switch (kind) {
        case OpKind::multiply: {
            const auto oa = orient(a, opts.transpose_a);
            const auto ob = orient(b, opts.transpose_b);
            require_same(*oa.cols, *ob.rows, "multiply inner dimension");
            std::map<QuantumNumber, BlockKey> a_by_col;
            for (const auto& k : a.keys) {
                const BlockKey ok = orient_key(k, opts.transpose_a);
                a_by_col.emplace(ok.col, k);
            }
            for (const auto& kb : b.keys) {
                const BlockKey okb = orient_key(kb, opts.transpose_b);
                auto it = a_by_col.find(okb.row);
                if (it == a_by_col.end()) continue;
                const BlockKey oka = orient_key(it->second, opts.transpose_a);
                emit(std::optional<BlockKey>(it->second), std::optional<BlockKey>(kb),
                     BlockKey{oka.row, okb.col}, opts.weight, Index{0}, Index{0});
            }
            break;
        }
        case OpKind::kron: {
            for (const auto& ka : a.keys) {
                const auto ra = *a.rows.find(ka.row), ca = *a.cols.find(ka.col);
                for (const auto& kb : b.keys) {
                    const auto rb = *b.rows.find(kb.row), cb = *b.cols.find(kb.col);
                    Index ro = 0, co = 0;
                    if (frows) {
                        ro = frows->locate(ra, rb).second;
                        co = fcols->locate(ca, cb).second;
                    }
                    emit(std::optional<BlockKey>(ka), std::optional<BlockKey>(kb),
                         BlockKey{ka.row + kb.row, ka.col + kb.col}, opts.weight, ro, co);
                }
            }
            break;
        }
        case OpKind::add: {
            require_same(a.rows, b.rows, "add rows");
            require_same(a.cols, b.cols, "add cols");
            if (a.delta != b.delta) throw BasisMismatch("add: operands differ in delta");
            for (const auto& ka : a.keys)
                emit(std::optional<BlockKey>(ka), std::optional<BlockKey>(), ka, 1.0, Index{0},
                     Index{0});
            for (const auto& kb : b.keys)
                emit(std::optional<BlockKey>(), std::optional<BlockKey>(kb), kb, opts.weight,
                     Index{0}, Index{0});
            break;
        }
    }
}

void output_space(const SectorStructure& a, const SectorStructure& b, OpKind kind,
                  const OperandOptions& opts, SectorBasis& rows, SectorBasis& cols,
                  QuantumNumber& delta) {
    switch (kind) {
        case OpKind::multiply: {
            const auto oa = orient(a, opts.transpose_a);
            const auto ob = orient(b, opts.transpose_b);
            rows = *oa.rows;
            cols = *ob.cols;
            delta = oa.delta + ob.delta;
            break;
        }
        case OpKind::kron:
            rows = fuse(a.rows, b.rows).basis;
            cols = fuse(a.cols, b.cols).basis;
            delta = a.delta + b.delta;
            break;
        case OpKind::add:
            rows = a.rows;
            cols = a.cols;
            delta = a.delta;
            break;
    }
}

const Matrix& operand_block(const SectorMatrix& m, const BlockKey& k) {
    const Matrix* p = m.find(k);
    if (!p) throw SectorError("task references missing block " + k.row.str() + "<-" + k.col.str());
    return *p;
}

void run_row(const TaskTable& table, const TaskRow& t, const SectorMatrix& a, const SectorMatrix& b,
             SectorMatrix& out) {
    Matrix& dst = out.block(t.out);
    switch (table.kind) {
        case OpKind::multiply: {
            const Matrix& x = operand_block(a, *t.a);
            const Matrix& y = operand_block(b, *t.b);
            using kernels::Op;
            try {
                kernels::gemm(t.transpose_a ? Op::T : Op::N, t.transpose_b ? Op::T : Op::N,
                              t.weight, x.view(), y.view(), 1.0, dst.view());
            } catch (const std::invalid_argument& e) {
                throw SectorError(std::string("corrupted task table: ") + e.what());
            }
            break;
        }
        case OpKind::kron: {
            const Matrix& x = operand_block(a, *t.a);
            const Matrix& y = operand_block(b, *t.b);
            if (t.row_offset + x.rows() * y.rows() > dst.rows() ||
                t.col_offset + x.cols() * y.cols() > dst.cols())
                throw SectorError("corrupted task table: kron block out of range");
            for (Index ja = 0; ja < x.cols(); ++ja)
                for (Index jb = 0; jb < y.cols(); ++jb) {
                    const Index col = t.col_offset + ja * y.cols() + jb;
                    for (Index ia = 0; ia < x.rows(); ++ia) {
                        const double xv = t.weight * x(ia, ja);
                        if (xv == 0.0) continue;
                        double* d = &dst(t.row_offset + ia * y.rows(), col);
                        for (Index ib = 0; ib < y.rows(); ++ib) d[ib] += xv * y(ib, jb);
                    }
                }
            break;
        }
        case OpKind::add: {
            const Matrix& x = t.a ? operand_block(a, *t.a) : operand_block(b, *t.b);
            if (x.rows() != dst.rows() || x.cols() != dst.cols())
                throw SectorError("corrupted task table: add block shape mismatch");
            for (Index k = 0; k < x.size(); ++k) dst.data()[k] += t.weight * x.data()[k];
            break;
        }
    }
}

}  // namespace

SectorStructure SectorStructure::of(const SectorMatrix& m) {
    SectorStructure s{m.row_basis(), m.col_basis(), m.delta(), {}};
    s.keys.reserve(m.block_count());
    for (const auto& [k, b] : m.blocks()) s.keys.push_back(k);
    return s;
}

SectorStructure SectorStructure::full(SectorBasis rows, SectorBasis cols, QuantumNumber delta) {
    SectorStructure s{std::move(rows), std::move(cols), delta, {}};
    for (const auto& e : s.cols.entries())
        if (s.rows.contains(e.qn + delta)) s.keys.push_back({e.qn + delta, e.qn});
    std::sort(s.keys.begin(), s.keys.end());
    return s;
}

SectorTable sector_table(const SectorStructure& a, const SectorStructure& b, OpKind kind,
                         const OperandOptions& opts) {
    SectorTable t;
    t.kind = kind;
    output_space(a, b, kind, opts, t.rows, t.cols, t.delta);
    std::set<BlockKey> out;
    enumerate(a, b, kind, opts, nullptr, nullptr,
              [&](auto, auto, const BlockKey& k, double, Index, Index) { out.insert(k); });
    t.outputs.assign(out.begin(), out.end());
    return t;
}

TaskTable task_table(const SectorMatrix& a, const SectorMatrix& b, OpKind kind,
                     const OperandOptions& opts) {
    const auto sa = SectorStructure::of(a);
    const auto sb = SectorStructure::of(b);
    TaskTable t;
    t.kind = kind;
    std::optional<FusedBasis> fr, fc;
    if (kind == OpKind::kron) {
        fr = fuse(a.row_basis(), b.row_basis());
        fc = fuse(a.col_basis(), b.col_basis());
        t.rows = fr->basis;
        t.cols = fc->basis;
        t.delta = a.delta() + b.delta();
    } else {
        output_space(sa, sb, kind, opts, t.rows, t.cols, t.delta);
    }
    enumerate(sa, sb, kind, opts, fr ? &*fr : nullptr, fc ? &*fc : nullptr,
              [&](std::optional<BlockKey> ka, std::optional<BlockKey> kb, const BlockKey& k,
                  double w, Index ro, Index co) {
                  t.tasks.push_back({ka, kb, k, w, opts.transpose_a, opts.transpose_b, ro, co});
              });
    std::stable_sort(t.tasks.begin(), t.tasks.end(),
                     [](const TaskRow& x, const TaskRow& y) { return x.out < y.out; });
    return t;
}

SectorMatrix make_accumulator(const TaskTable& table) {
    SectorMatrix out(table.rows, table.cols, table.delta);
    for (const auto& t : table.tasks) out.block(t.out);
    return out;
}

void execute_tasks(const TaskTable& table, const SectorMatrix& a, const SectorMatrix& b,
                   SectorMatrix& out) {
    for (const auto& t : table.tasks) run_row(table, t, a, b, out);
}

void execute_rows(const TaskTable& table, std::span<const std::size_t> rows, const SectorMatrix& a,
                  const SectorMatrix& b, SectorMatrix& out) {
    for (std::size_t i : rows) run_row(table, table.tasks.at(i), a, b, out);
}

SectorMatrix multiply(const SectorMatrix& a, const SectorMatrix& b, const OperandOptions& opts) {
    const auto t = task_table(a, b, OpKind::multiply, opts);
    auto out = make_accumulator(t);
    execute_tasks(t, a, b, out);
    return out;
}

SectorMatrix kron(const SectorMatrix& a, const SectorMatrix& b, double weight) {
    const auto t = task_table(a, b, OpKind::kron, {false, false, weight});
    auto out = make_accumulator(t);
    execute_tasks(t, a, b, out);
    return out;
}

SectorMatrix add(const SectorMatrix& a, const SectorMatrix& b, double weight) {
    const auto t = task_table(a, b, OpKind::add, {false, false, weight});
    auto out = make_accumulator(t);
    execute_tasks(t, a, b, out);
    return out;
}

Matrix densify(const SectorMatrix& op, Index guard) {
    const Index nr = op.row_basis().total_dimension(), nc = op.col_basis().total_dimension();
    if (nr > guard || nc > guard)
        throw DensifyGuardError("densify: dimension " + std::to_string(std::max(nr, nc)) +
                                " exceeds guard " + std::to_string(guard));
    Matrix d(nr, nc);
    for (const auto& [k, b] : op.blocks()) {
        const Index r0 = op.row_basis()[*op.row_basis().find(k.row)].offset;
        const Index c0 = op.col_basis()[*op.col_basis().find(k.col)].offset;
        for (Index j = 0; j < b.cols(); ++j)
            for (Index i = 0; i < b.rows(); ++i) d(r0 + i, c0 + j) = b(i, j);
    }
    return d;
}

FullFormCheck full_form_check(const SectorMatrix& op) { return {densify(op), 0.0}; }

std::vector<Index> kron_permutation(const SectorBasis& a, const SectorBasis& b) {
    const auto f = fuse(a, b);
    std::vector<Index> perm;
    perm.reserve(static_cast<std::size_t>(a.total_dimension() * b.total_dimension()));
    for (std::size_t sa = 0; sa < a.size(); ++sa)
        for (Index la = 0; la < a[sa].dim; ++la)
            for (std::size_t sb = 0; sb < b.size(); ++sb)
                for (Index lb = 0; lb < b[sb].dim; ++lb) {
                    const auto [s, off] = f.locate(sa, sb);
                    perm.push_back(f.basis[s].offset + off + la * b[sb].dim + lb);
                }
    return perm;
}

FullFormCheck full_form_check(const TaskTable& table, const SectorMatrix& a, const SectorMatrix& b,
                              const SectorMatrix& result) {
    FullFormCheck chk{densify(result), 0.0};
    const Matrix da = densify(a), db = densify(b);
    Matrix ref(chk.dense.rows(), chk.dense.cols());
    const double w = table.tasks.empty() ? 1.0 : table.tasks.front().weight;
    switch (table.kind) {
        case OpKind::multiply: {
            const bool ta = table.tasks.empty() ? false : table.tasks.front().transpose_a;
            const bool tb = table.tasks.empty() ? false : table.tasks.front().transpose_b;
            const Matrix x = ta ? da.transposed() : da;
            const Matrix y = tb ? db.transposed() : db;
            for (Index j = 0; j < y.cols(); ++j)
                for (Index l = 0; l < x.cols(); ++l)
                    for (Index i = 0; i < x.rows(); ++i) ref(i, j) += w * x(i, l) * y(l, j);
            break;
        }
        case OpKind::kron: {
            const auto pr = kron_permutation(a.row_basis(), b.row_basis());
            const auto pc = kron_permutation(a.col_basis(), b.col_basis());
            for (Index ia = 0; ia < da.rows(); ++ia)
                for (Index ja = 0; ja < da.cols(); ++ja)
                    for (Index ib = 0; ib < db.rows(); ++ib)
                        for (Index jb = 0; jb < db.cols(); ++jb)
                            ref(pr[ia * db.rows() + ib], pc[ja * db.cols() + jb]) =
                                w * da(ia, ja) * db(ib, jb);
            break;
        }
        case OpKind::add: {
            double wb = 1.0;
            for (const auto& t : table.tasks)
                if (t.b) wb = t.weight;
            for (Index k = 0; k < ref.size(); ++k) ref.data()[k] = da.data()[k] + wb * db.data()[k];
            break;
        }
    }
    if (ref.rows() != chk.dense.rows() || ref.cols() != chk.dense.cols())
        throw SectorError("full_form_check: result shape inconsistent with the table");
    chk.max_abs_deviation = max_abs_diff(ref, chk.dense);
    return chk;
}

}  // namespace sdmrg
