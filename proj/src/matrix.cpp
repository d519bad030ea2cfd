#include "lrfr/matrix.hpp"

#include <cmath>
#include <utility>

#include "lrfr/errors.hpp"
#include "lrfr/kernels.hpp"

namespace lrfr {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        fail(Errc::ShapeMismatch, "matrix data length does not match rows*cols");
    if (!all_finite()) fail(Errc::NotFinite, "matrix contains NaN or Inf");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool DenseMatrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double DenseMatrix::max_abs() const {
    double best = 0.0;
    for (double v : data_) best = std::max(best, std::fabs(v));
    return best;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) fail(Errc::ShapeMismatch, "matmul: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    kernels::active().gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) fail(Errc::ShapeMismatch, "matmul_tn: contraction dimensions differ");
    DenseMatrix c(a.cols(), b.cols());
    kernels::active().gemm_tn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) fail(Errc::ShapeMismatch, "max_abs_diff: shapes differ");
    double best = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        best = std::max(best, std::fabs(a.data()[i] - b.data()[i]));
    return best;
}

} // namespace lrfr
