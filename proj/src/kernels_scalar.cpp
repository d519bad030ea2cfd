#include "lrfr/kernels.hpp"

// Reference kernels. These define the numeric contract: the SIMD backends
// must reproduce these results bit-exactly.

namespace lrfr::kernels {
namespace {

void gemm_nn_scalar(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

void gemm_tn_scalar(const double* a, const double* b, double* c,
                    std::size_t k, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const double api = a[p * m + i];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
        }
    }
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void colwise_sum_scalar(const double* x, double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double* xrow = x + i * cols;
        for (std::size_t j = 0; j < cols; ++j) out[j] += xrow[j];
    }
}

void colwise_sqdev_sum_scalar(const double* x, const double* mean, double* out,
                              std::size_t rows, std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double* xrow = x + i * cols;
        for (std::size_t j = 0; j < cols; ++j) {
            const double d = xrow[j] - mean[j];
            out[j] += d * d;
        }
    }
}

void bn_normalize_scalar(const double* z, const double* mean, const double* inv_std,
                         const double* gamma, const double* beta,
                         double* xhat, double* y, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* zrow = z + i * cols;
        double* xrow = xhat + i * cols;
        double* yrow = y + i * cols;
        for (std::size_t j = 0; j < cols; ++j) {
            const double h = (zrow[j] - mean[j]) * inv_std[j];
            xrow[j] = h;
            yrow[j] = h * gamma[j] + beta[j];
        }
    }
}

} // namespace

const Ops& scalar_ops() {
    static const Ops ops = {
        "scalar",
        gemm_nn_scalar,
        gemm_tn_scalar,
        axpy_scalar,
        colwise_sum_scalar,
        colwise_sqdev_sum_scalar,
        bn_normalize_scalar,
    };
    return ops;
}

} // namespace lrfr::kernels
