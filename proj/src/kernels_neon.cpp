#include "lrfr/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

// NEON variants, same lane layout and operation order as the AVX2 backend
// (two doubles per vector instead of four). vmulq/vaddq are used separately
// so rounding matches the scalar reference bit for bit.

namespace lrfr::kernels {
namespace {

inline void accumulate_row_neon(const double aip, const double* brow, double* crow,
                                std::size_t n) {
    const float64x2_t va = vdupq_n_f64(aip);
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        const float64x2_t vb = vld1q_f64(brow + j);
        const float64x2_t vc = vld1q_f64(crow + j);
        vst1q_f64(crow + j, vaddq_f64(vc, vmulq_f64(va, vb)));
    }
    for (; j < n; ++j) crow[j] += aip * brow[j];
}

void gemm_nn_neon(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) accumulate_row_neon(arow[p], b + p * n, crow, n);
    }
}

void gemm_tn_neon(const double* a, const double* b, double* c,
                  std::size_t k, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        for (std::size_t p = 0; p < k; ++p) accumulate_row_neon(a[p * m + i], b + p * n, crow, n);
    }
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t vx = vld1q_f64(x + i);
        const float64x2_t vy = vld1q_f64(y + i);
        vst1q_f64(y + i, vaddq_f64(vy, vmulq_f64(va, vx)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void colwise_sum_neon(const double* x, double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double* xrow = x + i * cols;
        std::size_t j = 0;
        for (; j + 2 <= cols; j += 2) {
            vst1q_f64(out + j, vaddq_f64(vld1q_f64(out + j), vld1q_f64(xrow + j)));
        }
        for (; j < cols; ++j) out[j] += xrow[j];
    }
}

void colwise_sqdev_sum_neon(const double* x, const double* mean, double* out,
                            std::size_t rows, std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double* xrow = x + i * cols;
        std::size_t j = 0;
        for (; j + 2 <= cols; j += 2) {
            const float64x2_t vd = vsubq_f64(vld1q_f64(xrow + j), vld1q_f64(mean + j));
            vst1q_f64(out + j, vaddq_f64(vld1q_f64(out + j), vmulq_f64(vd, vd)));
        }
        for (; j < cols; ++j) {
            const double d = xrow[j] - mean[j];
            out[j] += d * d;
        }
    }
}

void bn_normalize_neon(const double* z, const double* mean, const double* inv_std,
                       const double* gamma, const double* beta,
                       double* xhat, double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* zrow = z + i * cols;
        double* xrow = xhat + i * cols;
        double* yrow = y + i * cols;
        std::size_t j = 0;
        for (; j + 2 <= cols; j += 2) {
            const float64x2_t vh = vmulq_f64(vsubq_f64(vld1q_f64(zrow + j), vld1q_f64(mean + j)),
                                             vld1q_f64(inv_std + j));
            vst1q_f64(xrow + j, vh);
            vst1q_f64(yrow + j, vaddq_f64(vmulq_f64(vh, vld1q_f64(gamma + j)),
                                          vld1q_f64(beta + j)));
        }
        for (; j < cols; ++j) {
            const double h = (zrow[j] - mean[j]) * inv_std[j];
            xrow[j] = h;
            yrow[j] = h * gamma[j] + beta[j];
        }
    }
}

} // namespace

const Ops& neon_ops() {
    static const Ops ops = {
        "neon",
        gemm_nn_neon,
        gemm_tn_neon,
        axpy_neon,
        colwise_sum_neon,
        colwise_sqdev_sum_neon,
        bn_normalize_neon,
    };
    return ops;
}

} // namespace lrfr::kernels

#endif // __aarch64__
