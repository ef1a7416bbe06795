#include "sdmrg/dmrg/renormalize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstring>
#include <map>
#include <string>
#include <tuple>

#include "sdmrg/sbmm4s/gemm.hpp"

namespace sdmrg {
namespace {

using kernels::Op;

void place(ConstMatrixView src, Matrix& dst, Index row0, Index col0) {
    for (Index c = 0; c < src.cols; ++c)
        for (Index r = 0; r < src.rows; ++r) dst(row0 + r, col0 + c) = src(r, c);
}

ConstMatrixView rows_of(const Matrix& m, Index first, Index count) {
    return {m.data() + first, count, m.cols(), std::max<Index>(m.rows(), 1)};
}

void check(bool ok, const char* what) {
    if (!ok) throw SectorError(what);
}

}  // namespace

std::vector<SectorEigen> sector_eigen(const SectorMatrix& op, bool descending) {
    std::vector<SectorEigen> out;
    for (const auto& e : op.row_basis().entries()) {
        SectorEigen se;
        se.qn = e.qn;
        const Matrix* m = op.find({e.qn, e.qn});
        if (!m) {
            se.values.assign(static_cast<std::size_t>(e.dim), 0.0);
            se.vectors = Matrix::identity(e.dim);
        } else {
            Eigen::Map<const Eigen::MatrixXd> a(m->data(), m->rows(), m->cols());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
            if (solver.info() != Eigen::Success) throw SectorError("sector_eigen: eigensolver failed");
            const auto& vals = solver.eigenvalues();
            const auto& vecs = solver.eigenvectors();
            se.vectors = Matrix(e.dim, e.dim);
            for (Index j = 0; j < e.dim; ++j) {
                const Index src = descending ? e.dim - 1 - j : j;
                se.values.push_back(vals(src));
                for (Index i = 0; i < e.dim; ++i) se.vectors(i, j) = vecs(i, src);
            }
        }
        out.push_back(std::move(se));
    }
    return out;
}

Truncation truncate(const SectorBasis& enlarged, const std::vector<SectorEigen>& eig,
                    const std::vector<Index>& kept) {
    check(eig.size() == enlarged.size() && kept.size() == enlarged.size(), "truncate: sector count mismatch");
    std::vector<std::pair<QuantumNumber, Index>> sectors;
    for (std::size_t i = 0; i < kept.size(); ++i)
        if (kept[i] > 0) sectors.emplace_back(enlarged[i].qn, kept[i]);
    Truncation t;
    t.basis = SectorBasis(sectors);
    t.transform = SectorMatrix(enlarged, t.basis, QuantumNumber{});
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (kept[i] == 0) continue;
        const Index d = enlarged[i].dim;
        Matrix u(d, kept[i]);
        for (Index j = 0; j < kept[i]; ++j)
            for (Index r = 0; r < d; ++r) u(r, j) = eig[i].vectors(r, j);
        t.transform.set_block({enlarged[i].qn, enlarged[i].qn}, std::move(u));
    }
    return t;
}

SectorMatrix reduced_density_matrix(const Wavefunction& psi, Side side, std::uint64_t* flops) {
    const WaveLayout& lay = *psi.layout;
    const SectorBasis& site = lay.site().sectors;
    const FusedBasis fused = side == Side::left ? fuse(lay.left(), site) : fuse(site, lay.right());
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Matrix> groups;
    for (std::size_t i = 0; i < lay.blocks().size(); ++i) {
        const WaveBlock& b = lay.blocks()[i];
        if (side == Side::left) {
            const auto [q, off] = fused.locate(b.l, b.s1);
            auto [it, fresh] = groups.try_emplace({q, b.s2, b.r});
            if (fresh) it->second = Matrix(fused.basis[q].dim, b.cols);
            place(psi.block(i), it->second, off, 0);
        } else {
            const auto [q, off] = fused.locate(b.s2, b.r);
            auto [it, fresh] = groups.try_emplace({q, b.l, b.s1});
            if (fresh) it->second = Matrix(b.rows, fused.basis[q].dim);
            place(psi.block(i), it->second, 0, off);
        }
    }
    SectorMatrix rdm(fused.basis, fused.basis, QuantumNumber{});
    std::uint64_t f = 0;
    for (const auto& [key, m] : groups) {
        const QuantumNumber q = fused.basis[std::get<0>(key)].qn;
        Matrix& rho = rdm.block({q, q});
        if (side == Side::left) {
            kernels::gemm(Op::N, Op::T, 1.0, m.view(), m.view(), 1.0, rho.view());
            f += kernels::gemm_flops(m.rows(), m.rows(), m.cols());
        } else {
            kernels::gemm(Op::T, Op::N, 1.0, m.view(), m.view(), 1.0, rho.view());
            f += kernels::gemm_flops(m.cols(), m.cols(), m.rows());
        }
    }
    if (flops) *flops += f;
    return rdm;
}

Selection select_states(const SectorMatrix& rdm, std::size_t max_states) {
    if (max_states == 0) throw std::invalid_argument("select_states: at least one state must be kept");
    const auto eig = sector_eigen(rdm, true);
    struct Candidate {
        double w;
        std::size_t sector;
        Index rank;
    };
    std::vector<Candidate> all;
    for (std::size_t s = 0; s < eig.size(); ++s)
        for (std::size_t k = 0; k < eig[s].values.size(); ++k)
            all.push_back({eig[s].values[k], s, static_cast<Index>(k)});
    std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
        if (a.w != b.w) return a.w > b.w;
        if (a.sector != b.sector) return a.sector < b.sector;
        return a.rank < b.rank;
    });
    Selection sel;
    std::vector<Index> kept(eig.size(), 0);
    double weight = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        sel.spectrum.push_back(all[i].w);
        if (i < max_states) {
            ++kept[all[i].sector];
            weight += all[i].w;
        }
    }
    sel.truncation_error = std::clamp(1.0 - weight, 0.0, 1.0);
    sel.truncation = truncate(rdm.row_basis(), eig, kept);
    return sel;
}

std::vector<SectorMatrix> transform_operators(const std::vector<SectorMatrix>& ops, const Truncation& t,
                                              mazerunner::RunnerPool* pool, std::size_t arena_bytes,
                                              TransformStats* stats) {
    const SectorBasis& big = t.transform.row_basis();
    std::vector<SectorMatrix> out;
    out.reserve(ops.size());
    for (const auto& op : ops) {
        check(op.row_basis() == big && op.col_basis() == big, "transform_operators: operator basis mismatch");
        SectorMatrix o(t.basis, t.basis, op.delta());
        for (const auto& [key, m] : op.blocks())
            if (t.basis.contains(key.row) && t.basis.contains(key.col)) o.block(key);
        out.push_back(std::move(o));
    }

    auto loader = [](const Matrix* m) {
        return [m](std::span<std::byte> dst) {
            std::memcpy(dst.data(), m->data(), static_cast<std::size_t>(m->size()) * sizeof(double));
        };
    };
    auto bytes = [](const Matrix& m) { return static_cast<std::size_t>(m.size()) * sizeof(double); };

    std::uint64_t flops = 0;
    std::size_t next_id = 0;
    std::vector<ttcache::DependencyNode> roots;
    for (const auto& e : t.basis.entries()) {
        const Matrix* uq = t.transform.find({e.qn, e.qn});
        const Index dq = big.dim(e.qn), kq = e.dim;
        std::map<QuantumNumber, std::vector<std::size_t>> by_row;
        for (std::size_t a = 0; a < ops.size(); ++a) {
            const QuantumNumber qr = e.qn + ops[a].delta();
            if (t.basis.contains(qr) && ops[a].find({qr, e.qn})) by_row[qr].push_back(a);
        }
        if (by_row.empty()) continue;
        ttcache::DependencyNode root;
        root.id = next_id++;
        root.payload_size = bytes(*uq);
        root.loader = loader(uq);
        for (const auto& [qr, list] : by_row) {
            const Matrix* ur = t.transform.find({qr, qr});
            const Index dr = big.dim(qr), kr = t.basis.dim(qr);
            ttcache::DependencyNode child;
            child.id = next_id++;
            child.payload_size = bytes(*ur);
            child.loader = loader(ur);
            for (std::size_t a : list) {
                const Matrix* blk = ops[a].find({qr, e.qn});
                Matrix* dst = out[a].find({qr, e.qn});
                ttcache::DependencyNode leaf;
                leaf.id = next_id++;
                leaf.payload_size = bytes(*blk);
                leaf.loader = loader(blk);
                leaf.tasks.push_back([=](const ttcache::VisitContext& ctx) {
                    const ConstMatrixView u_col{ctx.payload_as<double>(0).data(), dq, kq, std::max<Index>(dq, 1)};
                    const ConstMatrixView u_row{ctx.payload_as<double>(1).data(), dr, kr, std::max<Index>(dr, 1)};
                    const ConstMatrixView o{ctx.payload_as<double>(2).data(), dr, dq, std::max<Index>(dr, 1)};
                    Matrix temp(dr, kq);
                    kernels::gemm(Op::N, Op::N, 1.0, o, u_col, 0.0, temp.view());
                    kernels::gemm(Op::T, Op::N, 1.0, u_row, temp.view(), 0.0, dst->view());
                });
                flops += kernels::gemm_flops(dr, kq, dq) + kernels::gemm_flops(kr, kq, dr);
                child.children.push_back(std::move(leaf));
            }
            root.children.push_back(std::move(child));
        }
        roots.push_back(std::move(root));
    }

    TransformStats ts;
    ts.flops = flops;
    if (!roots.empty()) {
        std::size_t need = 0;
        for (const auto& r : roots) need = std::max(need, ttcache::plan_check(r));
        const std::size_t capacity = arena_bytes > 0 ? arena_bytes : need;
        if (need > capacity)
            throw ttcache::CapacityExceeded("transform_operators: dependency tree needs " + std::to_string(need) +
                                            " bytes, arena holds " + std::to_string(capacity));
        const std::size_t workers = pool ? pool->workers() : 1;
        std::vector<ttcache::Arena> arenas;
        arenas.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) arenas.emplace_back(capacity);
        if (pool) {
            ts.traversal = ttcache::run_forest(*pool, roots, arenas);
        } else {
            for (const auto& r : roots) ts.traversal += ttcache::ttcache_run(r, arenas[0]);
        }
    }
    if (stats) *stats = ts;
    return out;
}

RenormalizeResult renormalize(const Wavefunction& psi, Side side, const BlockState& block, const Mpo& mpo,
                              std::size_t max_states, mazerunner::RunnerPool* pool, std::size_t arena_bytes) {
    check(block.side == side, "renormalize: block is on the wrong side");
    check(block.basis == (side == Side::left ? psi.layout->left() : psi.layout->right()),
          "renormalize: block basis does not match the wavefunction");
    RenormalizeResult res;
    const SectorMatrix rdm = reduced_density_matrix(psi, side, &res.flops);
    res.selection = select_states(rdm, max_states);
    EnlargedBlock enl = enlarge(block, mpo);
    check(enl.fused.basis == rdm.row_basis(), "renormalize: enlarged basis mismatch");
    TransformStats ts;
    res.block.side = side;
    res.block.bond = enl.bond;
    res.block.basis = res.selection.truncation.basis;
    res.block.ops = transform_operators(enl.ops, res.selection.truncation, pool, arena_bytes, &ts);
    res.block.transform = res.selection.truncation.transform;
    res.block.has_transform = true;
    res.flops += ts.flops;
    return res;
}

Wavefunction predict_after_left(const Wavefunction& psi, const BlockState& left_new, const BlockState& right_old,
                                const BlockState& right_next, std::uint64_t* flops) {
    const WaveLayout& lay = *psi.layout;
    const SectorBasis& site = lay.site().sectors;
    check(left_new.has_transform && right_old.has_transform, "predict: missing transform");
    const FusedBasis fl = fuse(lay.left(), site);
    const FusedBasis fr = fuse(site, right_next.basis);
    const SectorMatrix& u = left_new.transform;
    const SectorMatrix& v = right_old.transform;
    check(u.row_basis() == fl.basis && v.row_basis() == fr.basis && v.col_basis() == lay.right(),
          "predict: transforms do not match the wavefunction");

    std::uint64_t f = 0;
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Matrix> c;
    for (std::size_t i = 0; i < lay.blocks().size(); ++i) {
        const WaveBlock& b = lay.blocks()[i];
        const auto [q, off] = fl.locate(b.l, b.s1);
        const QuantumNumber qn = fl.basis[q].qn;
        const Matrix* uq = u.find({qn, qn});
        if (!uq) continue;
        const std::size_t ln = *left_new.basis.find(qn);
        auto [it, fresh] = c.try_emplace({ln, b.s2, b.r});
        if (fresh) it->second = Matrix(uq->cols(), b.cols);
        kernels::gemm(Op::T, Op::N, 1.0, rows_of(*uq, off, b.rows), psi.block(i), 1.0, it->second.view());
        f += kernels::gemm_flops(uq->cols(), b.cols, b.rows);
    }

    auto layout = std::make_shared<const WaveLayout>(left_new.basis, lay.site(), right_next.basis, lay.target());
    Wavefunction out(layout);
    for (std::size_t i = 0; i < layout->blocks().size(); ++i) {
        const WaveBlock& b = layout->blocks()[i];
        const auto [q, off] = fr.locate(b.s2, b.r);
        const QuantumNumber qn = fr.basis[q].qn;
        const Matrix* vq = v.find({qn, qn});
        if (!vq) continue;
        const auto it = c.find({b.l, b.s1, *lay.right().find(qn)});
        if (it == c.end()) continue;
        kernels::gemm(Op::N, Op::T, 1.0, it->second.view(), rows_of(*vq, off, b.cols), 1.0, out.block(i));
        f += kernels::gemm_flops(b.rows, b.cols, vq->cols());
    }
    if (flops) *flops += f;
    return out;
}

Wavefunction predict_after_right(const Wavefunction& psi, const BlockState& right_new, const BlockState& left_old,
                                 const BlockState& left_prev, std::uint64_t* flops) {
    const WaveLayout& lay = *psi.layout;
    const SectorBasis& site = lay.site().sectors;
    check(right_new.has_transform && left_old.has_transform, "predict: missing transform");
    const FusedBasis fr = fuse(site, lay.right());
    const FusedBasis fl = fuse(left_prev.basis, site);
    const SectorMatrix& v = right_new.transform;
    const SectorMatrix& u = left_old.transform;
    check(v.row_basis() == fr.basis && u.row_basis() == fl.basis && u.col_basis() == lay.left(),
          "predict: transforms do not match the wavefunction");

    std::uint64_t f = 0;
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Matrix> c;
    for (std::size_t i = 0; i < lay.blocks().size(); ++i) {
        const WaveBlock& b = lay.blocks()[i];
        const auto [q, off] = fr.locate(b.s2, b.r);
        const QuantumNumber qn = fr.basis[q].qn;
        const Matrix* vq = v.find({qn, qn});
        if (!vq) continue;
        const std::size_t rn = *right_new.basis.find(qn);
        auto [it, fresh] = c.try_emplace({b.l, b.s1, rn});
        if (fresh) it->second = Matrix(b.rows, vq->cols());
        kernels::gemm(Op::N, Op::N, 1.0, psi.block(i), rows_of(*vq, off, b.cols), 1.0, it->second.view());
        f += kernels::gemm_flops(b.rows, vq->cols(), b.cols);
    }

    auto layout = std::make_shared<const WaveLayout>(left_prev.basis, lay.site(), right_new.basis, lay.target());
    Wavefunction out(layout);
    for (std::size_t i = 0; i < layout->blocks().size(); ++i) {
        const WaveBlock& b = layout->blocks()[i];
        const auto [q, off] = fl.locate(b.l, b.s1);
        const QuantumNumber qn = fl.basis[q].qn;
        const Matrix* uq = u.find({qn, qn});
        if (!uq) continue;
        const auto it = c.find({*lay.left().find(qn), b.s2, b.r});
        if (it == c.end()) continue;
        kernels::gemm(Op::N, Op::N, 1.0, rows_of(*uq, off, b.rows), it->second.view(), 1.0, out.block(i));
        f += kernels::gemm_flops(b.rows, b.cols, uq->cols());
    }
    if (flops) *flops += f;
    return out;
}

}  // namespace sdmrg
