#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

#include "sdmrg/core/matrix.hpp"
#include "sdmrg/sbmm4s/gemm.hpp"

// Strided batched matrix multiplication for summation:
//
//     B := B + alpha * sum_i L_i * A * R_i^T,   i = 1..p
//
// with A (m x n), B (q x r), L a stack of p (q x m) matrices and R a stack of
// p (r x n) matrices. Step 1 computes all A * R_i^T with one strided batched
// GEMM whose outputs are interleaved (leading dimension m*p, member stride m),
// so the workspace reads as the vertical concatenation [A R_1^T; ...; A R_p^T].
// Step 2 multiplies the horizontal concatenation [L_1 | ... | L_p] by that
// workspace; the inner dimension m*p performs the sum over i.

namespace sdmrg::sbmm4s {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class WorkspaceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Batch descriptor: `count` matrices of rows x cols, leading dimension `ld`,
/// member i starting at data + i * stride.
struct StridedStack {
    const double* data = nullptr;
    Index rows = 0;
    Index cols = 0;
    Index ld = 0;
    Index stride = 0;
    Index count = 0;

    /// Contiguous stack: ld == rows, stride == rows * cols.
    static StridedStack contiguous(const double* data, Index rows, Index cols, Index count) {
        return {data, rows, cols, rows, rows * cols, count};
    }
    ConstMatrixView member(Index i) const { return {data + i * stride, rows, cols, ld}; }
    StridedStack slice(Index first, Index n) const {
        return {data + first * stride, rows, cols, ld, stride, n};
    }
    bool is_contiguous() const { return ld == rows && stride == rows * cols; }
};

struct AccumulationProblem {
    double alpha = 1.0;
    ConstMatrixView a;   // m x n
    MatrixView b;        // q x r accumulator
    StridedStack left;   // q x m x p
    StridedStack right;  // r x n x p

    Index m() const { return a.rows; }
    Index n() const { return a.cols; }
    Index q() const { return b.rows; }
    Index r() const { return b.cols; }
    Index p() const { return left.count; }

    /// Throws DimensionError unless the shapes agree with the contract above.
    void validate() const;
};

/// Doubles of workspace the fused path needs: m * p * r.
inline Index fused_workspace(const AccumulationProblem& pr) { return pr.m() * pr.p() * pr.r(); }

/// Step 1. temp must be (m*p) x r with ld == m*p.
void batched_gemm_interleaved(ConstMatrixView a, const StridedStack& right, MatrixView temp);

/// Step 2. left must be contiguous so that it reads as one q x (m*p) matrix.
void concat_gemm_accumulate(const StridedStack& left, ConstMatrixView temp, double alpha,
                            MatrixView b);

struct Report {
    Index chunks = 0;  // number of fused two-kernel passes executed
};

/// Fused accumulation. When the workspace is smaller than m*p*r the batch is
/// split into equal halves recursively; WorkspaceError if even a single
/// member does not fit.
Report sbmm4s(const AccumulationProblem& problem, std::span<double> workspace);

/// Traditional path: per-member GEMMs with accumulation into B.
/// Needs m*r doubles of workspace.
void accumulate_per_member(const AccumulationProblem& problem, std::span<double> workspace);

/// FLOPs of the fused path: p*2*m*r*n + 2*q*r*(m*p).
std::uint64_t flop_count(Index m, Index n, Index q, Index r, Index p);

}  // namespace sdmrg::sbmm4s
