#include "lrfr/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#if defined(LRFR_AVX2_TU)

#include <immintrin.h>

// AVX2 variants. Lanes hold independent output columns and the reduction
// loops run in the same order as the scalar reference; separate mul/add is
// used instead of FMA so every intermediate rounds exactly like the scalar
// code. That keeps scalar and AVX2 results bit-identical.

namespace lrfr::kernels {
namespace {

inline void accumulate_row_avx2(const double aip, const double* brow, double* crow,
                                std::size_t n) {
    const __m256d va = _mm256_set1_pd(aip);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d vb = _mm256_loadu_pd(brow + j);
        const __m256d vc = _mm256_loadu_pd(crow + j);
        _mm256_storeu_pd(crow + j, _mm256_add_pd(vc, _mm256_mul_pd(va, vb)));
    }
    for (; j < n; ++j) crow[j] += aip * brow[j];
}

void gemm_nn_avx2(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) accumulate_row_avx2(arow[p], b + p * n, crow, n);
    }
}

void gemm_tn_avx2(const double* a, const double* b, double* c,
                  std::size_t k, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        for (std::size_t p = 0; p < k; ++p) accumulate_row_avx2(a[p * m + i], b + p * n, crow, n);
    }
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void colwise_sum_avx2(const double* x, double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double* xrow = x + i * cols;
        std::size_t j = 0;
        for (; j + 4 <= cols; j += 4) {
            const __m256d vo = _mm256_loadu_pd(out + j);
            const __m256d vx = _mm256_loadu_pd(xrow + j);
            _mm256_storeu_pd(out + j, _mm256_add_pd(vo, vx));
        }
        for (; j < cols; ++j) out[j] += xrow[j];
    }
}

void colwise_sqdev_sum_avx2(const double* x, const double* mean, double* out,
                            std::size_t rows, std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double* xrow = x + i * cols;
        std::size_t j = 0;
        for (; j + 4 <= cols; j += 4) {
            const __m256d vd = _mm256_sub_pd(_mm256_loadu_pd(xrow + j), _mm256_loadu_pd(mean + j));
            const __m256d vo = _mm256_loadu_pd(out + j);
            _mm256_storeu_pd(out + j, _mm256_add_pd(vo, _mm256_mul_pd(vd, vd)));
        }
        for (; j < cols; ++j) {
            const double d = xrow[j] - mean[j];
            out[j] += d * d;
        }
    }
}

void bn_normalize_avx2(const double* z, const double* mean, const double* inv_std,
                       const double* gamma, const double* beta,
                       double* xhat, double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* zrow = z + i * cols;
        double* xrow = xhat + i * cols;
        double* yrow = y + i * cols;
        std::size_t j = 0;
        for (; j + 4 <= cols; j += 4) {
            const __m256d vh = _mm256_mul_pd(
                _mm256_sub_pd(_mm256_loadu_pd(zrow + j), _mm256_loadu_pd(mean + j)),
                _mm256_loadu_pd(inv_std + j));
            _mm256_storeu_pd(xrow + j, vh);
            const __m256d vy = _mm256_add_pd(_mm256_mul_pd(vh, _mm256_loadu_pd(gamma + j)),
                                             _mm256_loadu_pd(beta + j));
            _mm256_storeu_pd(yrow + j, vy);
        }
        for (; j < cols; ++j) {
            const double h = (zrow[j] - mean[j]) * inv_std[j];
            xrow[j] = h;
            yrow[j] = h * gamma[j] + beta[j];
        }
    }
}

} // namespace

const Ops& avx2_ops() {
    static const Ops ops = {
        "avx2",
        gemm_nn_avx2,
        gemm_tn_avx2,
        axpy_avx2,
        colwise_sum_avx2,
        colwise_sqdev_sum_avx2,
        bn_normalize_avx2,
    };
    return ops;
}

} // namespace lrfr::kernels

#endif // LRFR_AVX2_TU
#endif // x86-64
