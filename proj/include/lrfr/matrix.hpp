#pragma once

#include <cstddef>
#include <vector>

namespace lrfr {

// Row-major dense real matrix, double precision. The data-taking constructor
// rejects NaN/Inf entries; the shape-only constructor zero-fills.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const DenseMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const;
    double max_abs() const;
    DenseMatrix transposed() const;

    bool operator==(const DenseMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A * B. Shapes must chain; throws ShapeMismatch otherwise.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// C = A^T * B with A stored (k x m): the k rows are the contraction axis.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);

// Max-abs difference; shapes must match.
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

} // namespace lrfr
