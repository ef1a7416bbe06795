#include "sdmrg/sbmm4s/sbmm4s.hpp"

#include <string>

namespace sdmrg::sbmm4s {
namespace {

std::string shape(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

void AccumulationProblem::validate() const {
    if (left.count != right.count)
        throw DimensionError("sbmm4s: L and R stacks differ in batch count");
    if (left.rows != q() || left.cols != m())
        throw DimensionError("sbmm4s: L members are " + shape(left.rows, left.cols) +
                             ", expected " + shape(q(), m()));
    if (right.rows != r() || right.cols != n())
        throw DimensionError("sbmm4s: R members are " + shape(right.rows, right.cols) +
                             ", expected " + shape(r(), n()));
    if (left.ld < left.rows || right.ld < right.rows)
        throw DimensionError("sbmm4s: stack leading dimension too small");
}

void batched_gemm_interleaved(ConstMatrixView a, const StridedStack& right, MatrixView temp) {
    const Index m = a.rows, n = a.cols, r = right.rows, p = right.count;
    if (right.cols != n)
        throw DimensionError("batched_gemm_interleaved: R members have " +
                             std::to_string(right.cols) + " columns, A has " +
                             std::to_string(n));
    if (temp.rows != m * p || temp.cols != r)
        throw DimensionError("batched_gemm_interleaved: temp is " + shape(temp.rows, temp.cols) +
                             ", expected " + shape(m * p, r));
    if (temp.ld != m * p)
        throw DimensionError("batched_gemm_interleaved: temp leading dimension must be m*p");
    // A broadcast (stride 0); outputs interleaved with ldc = m*p, member stride m.
    kernels::gemm_strided_batched(kernels::Op::N, kernels::Op::T, m, r, n, 1.0, a.data,
                                  std::max<Index>(a.ld, 1), 0, right.data,
                                  std::max<Index>(right.ld, 1), right.stride, 0.0, temp.data,
                                  std::max<Index>(m * p, 1), m, p);
}

void concat_gemm_accumulate(const StridedStack& left, ConstMatrixView temp, double alpha,
                            MatrixView b) {
    const Index q = left.rows, m = left.cols, p = left.count;
    if (!left.is_contiguous())
        throw DimensionError("concat_gemm_accumulate: L stack must be contiguous");
    if (temp.rows != m * p)
        throw DimensionError("concat_gemm_accumulate: temp has " + std::to_string(temp.rows) +
                             " rows, expected m*p = " + std::to_string(m * p));
    if (b.rows != q || b.cols != temp.cols)
        throw DimensionError("concat_gemm_accumulate: B is " + shape(b.rows, b.cols) +
                             ", expected " + shape(q, temp.cols));
    const ConstMatrixView l_concat{left.data, q, m * p, std::max<Index>(q, 1)};
    kernels::gemm(kernels::Op::N, kernels::Op::N, alpha, l_concat, temp, 1.0, b);
}

Report sbmm4s(const AccumulationProblem& problem, std::span<double> workspace) {
    problem.validate();
    Report report;
    const Index p = problem.p();
    if (p == 0 || problem.alpha == 0.0) return report;
    const Index need = fused_workspace(problem);
    if (need <= static_cast<Index>(workspace.size())) {
        MatrixView temp{workspace.data(), problem.m() * p, problem.r(),
                        std::max<Index>(problem.m() * p, 1)};
        batched_gemm_interleaved(problem.a, problem.right, temp);
        concat_gemm_accumulate(problem.left, temp, problem.alpha, problem.b);
        report.chunks = 1;
        return report;
    }
    if (p == 1)
        throw WorkspaceError("sbmm4s: workspace of " + std::to_string(workspace.size()) +
                             " doubles cannot hold one member (" + std::to_string(need) + ")");
    const Index half = p / 2;
    AccumulationProblem lo = problem, hi = problem;
    lo.left = problem.left.slice(0, half);
    lo.right = problem.right.slice(0, half);
    hi.left = problem.left.slice(half, p - half);
    hi.right = problem.right.slice(half, p - half);
    report.chunks += sbmm4s(lo, workspace).chunks;
    report.chunks += sbmm4s(hi, workspace).chunks;
    return report;
}

void accumulate_per_member(const AccumulationProblem& problem, std::span<double> workspace) {
    problem.validate();
    const Index m = problem.m(), r = problem.r();
    if (static_cast<Index>(workspace.size()) < m * r)
        throw WorkspaceError("accumulate_per_member: workspace too small");
    MatrixView temp{workspace.data(), m, r, std::max<Index>(m, 1)};
    for (Index i = 0; i < problem.p(); ++i) {
        kernels::gemm(kernels::Op::N, kernels::Op::T, 1.0, problem.a, problem.right.member(i),
                      0.0, temp);
        kernels::gemm(kernels::Op::N, kernels::Op::N, problem.alpha, problem.left.member(i),
                      temp, 1.0, problem.b);
    }
}

std::uint64_t flop_count(Index m, Index n, Index q, Index r, Index p) {
    return static_cast<std::uint64_t>(p) * kernels::gemm_flops(m, r, n) +
           kernels::gemm_flops(q, r, m * p);
}

}  // namespace sdmrg::sbmm4s
