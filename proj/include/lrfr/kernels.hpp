#pragma once

#include <cstddef>
#include <string>

// Inner-loop numeric kernels. Every kernel ships as a scalar reference
// implementation plus SIMD variants (AVX2 on x86-64, NEON on arm64) chosen
// once at runtime. The SIMD variants vectorize across independent output
// lanes and keep the exact per-element operation order of the scalar code
// (multiply then add, no FMA contraction), so all backends produce
// bit-identical results. Equivalence is enforced by tests/test_kernels.cpp.

namespace lrfr::kernels {

enum class Backend { scalar, avx2, neon };

struct Ops {
    const char* name;

    // C (m x n) = A (m x k) * B (k x n); row-major; C is overwritten.
    void (*gemm_nn)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n);

    // C (m x n) = A^T * B with A stored (k x m), B stored (k x n); row-major;
    // C is overwritten.
    void (*gemm_tn)(const double* a, const double* b, double* c,
                    std::size_t k, std::size_t m, std::size_t n);

    // y += alpha * x over n entries.
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

    // out[j] = sum_i x[i][j] for an (rows x cols) row-major matrix.
    void (*colwise_sum)(const double* x, double* out, std::size_t rows, std::size_t cols);

    // out[j] = sum_i (x[i][j] - mean[j])^2.
    void (*colwise_sqdev_sum)(const double* x, const double* mean, double* out,
                              std::size_t rows, std::size_t cols);

    // Per-column affine normalization:
    //   xhat[i][j] = (z[i][j] - mean[j]) * inv_std[j]
    //   y[i][j]    = xhat[i][j] * gamma[j] + beta[j]
    void (*bn_normalize)(const double* z, const double* mean, const double* inv_std,
                         const double* gamma, const double* beta,
                         double* xhat, double* y, std::size_t rows, std::size_t cols);
};

const Ops& scalar_ops();

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_supported();
const Ops& avx2_ops(); // only call when avx2_supported()
#endif

#if defined(__aarch64__)
const Ops& neon_ops();
#endif

// Active table. Resolved on first use: the LRFR_KERNEL environment variable
// (scalar | avx2 | neon | auto) wins, otherwise the best supported backend.
const Ops& active();
Backend active_backend();

// Overrides the active table; throws lrfr::Error(InvalidSpec) when the
// requested backend is not available on this machine. Not thread-safe.
void force_backend(Backend backend);

const char* backend_name(Backend backend);

} // namespace lrfr::kernels
