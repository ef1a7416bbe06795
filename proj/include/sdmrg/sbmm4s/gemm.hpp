#pragma once

#include <atomic>
#include <cstdint>

#include "sdmrg/core/matrix.hpp"

namespace sdmrg::kernels {

enum class Op { N, T };

/// Process-wide instrumentation. Every public kernel entry point counts as one
/// kernel call; FLOPs follow the 2*m*n*k multiply-add convention.
struct KernelSnapshot {
    std::uint64_t kernel_calls = 0;
    std::uint64_t gemm_calls = 0;
    std::uint64_t batched_calls = 0;
    std::uint64_t flops = 0;

    KernelSnapshot operator-(const KernelSnapshot& o) const {
        return {kernel_calls - o.kernel_calls, gemm_calls - o.gemm_calls,
                batched_calls - o.batched_calls, flops - o.flops};
    }
};

KernelSnapshot kernel_snapshot();

inline std::uint64_t gemm_flops(Index m, Index n, Index k) {
    return 2ull * static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(n) *
           static_cast<std::uint64_t>(k);
}

/// C := alpha * op(A) * op(B) + beta * C  (column-major).
/// beta == 0 overwrites C without reading it.
void gemm(Op trans_a, Op trans_b, double alpha, ConstMatrixView a, ConstMatrixView b,
          double beta, MatrixView c);

/// Strided batched GEMM with the usual BLAS parameter block. Member i uses
/// a + i*stride_a, b + i*stride_b, c + i*stride_c. A stride of zero broadcasts.
void gemm_strided_batched(Op trans_a, Op trans_b, Index m, Index n, Index k, double alpha,
                          const double* a, Index lda, Index stride_a, const double* b,
                          Index ldb, Index stride_b, double beta, double* c, Index ldc,
                          Index stride_c, Index batch_count);

}  // namespace sdmrg::kernels
