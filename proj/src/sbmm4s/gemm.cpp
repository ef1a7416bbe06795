#include "sdmrg/sbmm4s/gemm.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace sdmrg::kernels {
namespace {

std::atomic<std::uint64_t> g_gemm_calls{0};
std::atomic<std::uint64_t> g_batched_calls{0};
std::atomic<std::uint64_t> g_flops{0};

constexpr Index kBlockK = 128;

// Reference kernel. Each C(i, j) accumulates its k-terms in increasing order,
// independent of the leading dimensions involved.
void gemm_kernel(Op ta, Op tb, Index m, Index n, Index k, double alpha, const double* a,
                 Index lda, const double* b, Index ldb, double beta, double* c, Index ldc) {
    if (beta == 0.0) {
        for (Index j = 0; j < n; ++j) std::fill_n(c + j * ldc, m, 0.0);
    } else if (beta != 1.0) {
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < m; ++i) c[i + j * ldc] *= beta;
    }
    if (alpha == 0.0 || k == 0) return;

    if (ta == Op::N) {
        for (Index l0 = 0; l0 < k; l0 += kBlockK) {
            const Index l1 = std::min(k, l0 + kBlockK);
            for (Index j = 0; j < n; ++j) {
                double* cj = c + j * ldc;
                for (Index l = l0; l < l1; ++l) {
                    const double t = alpha * (tb == Op::N ? b[l + j * ldb] : b[j + l * ldb]);
                    const double* al = a + l * lda;
                    for (Index i = 0; i < m; ++i) cj[i] += al[i] * t;
                }
            }
        }
        return;
    }
    // op(A) = A^T: dot products down the columns of A.
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) {
            const double* ai = a + i * lda;
            double s = 0.0;
            if (tb == Op::N) {
                const double* bj = b + j * ldb;
                for (Index l = 0; l < k; ++l) s += ai[l] * bj[l];
            } else {
                for (Index l = 0; l < k; ++l) s += ai[l] * b[j + l * ldb];
            }
            c[i + j * ldc] += alpha * s;
        }
    }
}

}  // namespace

KernelSnapshot kernel_snapshot() {
    KernelSnapshot s;
    s.gemm_calls = g_gemm_calls.load(std::memory_order_relaxed);
    s.batched_calls = g_batched_calls.load(std::memory_order_relaxed);
    s.kernel_calls = s.gemm_calls + s.batched_calls;
    s.flops = g_flops.load(std::memory_order_relaxed);
    return s;
}

void gemm(Op trans_a, Op trans_b, double alpha, ConstMatrixView a, ConstMatrixView b,
          double beta, MatrixView c) {
    const Index m = trans_a == Op::N ? a.rows : a.cols;
    const Index k = trans_a == Op::N ? a.cols : a.rows;
    const Index kb = trans_b == Op::N ? b.rows : b.cols;
    const Index n = trans_b == Op::N ? b.cols : b.rows;
    if (k != kb || c.rows != m || c.cols != n)
        throw std::invalid_argument("gemm: dimension mismatch (" + std::to_string(m) + "x" +
                                    std::to_string(k) + " * " + std::to_string(kb) + "x" +
                                    std::to_string(n) + " -> " + std::to_string(c.rows) + "x" +
                                    std::to_string(c.cols) + ")");
    g_gemm_calls.fetch_add(1, std::memory_order_relaxed);
    g_flops.fetch_add(gemm_flops(m, n, k), std::memory_order_relaxed);
    if (m == 0 || n == 0) return;
    gemm_kernel(trans_a, trans_b, m, n, k, alpha, a.data, std::max<Index>(a.ld, 1), b.data,
                std::max<Index>(b.ld, 1), beta, c.data, std::max<Index>(c.ld, 1));
}

void gemm_strided_batched(Op trans_a, Op trans_b, Index m, Index n, Index k, double alpha,
                          const double* a, Index lda, Index stride_a, const double* b,
                          Index ldb, Index stride_b, double beta, double* c, Index ldc,
                          Index stride_c, Index batch_count) {
    if (m < 0 || n < 0 || k < 0 || batch_count < 0)
        throw std::invalid_argument("gemm_strided_batched: negative dimension");
    if (ldc < m || lda < (trans_a == Op::N ? m : k) || ldb < (trans_b == Op::N ? k : n))
        throw std::invalid_argument("gemm_strided_batched: leading dimension too small");
    g_batched_calls.fetch_add(1, std::memory_order_relaxed);
    g_flops.fetch_add(static_cast<std::uint64_t>(batch_count) * gemm_flops(m, n, k),
                      std::memory_order_relaxed);
    for (Index i = 0; i < batch_count; ++i)
        gemm_kernel(trans_a, trans_b, m, n, k, alpha, a + i * stride_a, std::max<Index>(lda, 1),
                    b + i * stride_b, std::max<Index>(ldb, 1), beta, c + i * stride_c,
                    std::max<Index>(ldc, 1));
}

}  // namespace sdmrg::kernels
