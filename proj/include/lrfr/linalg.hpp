#pragma once

#include <cstddef>
#include <vector>

#include "lrfr/matrix.hpp"

namespace lrfr {

// Eigendecomposition of a symmetric PSD matrix: eigenvalues sorted
// non-increasing, eigenvector columns aligned with them and orthonormal.
struct Spectrum {
    std::vector<double> eigenvalues;
    DenseMatrix eigenvectors;
};

// Cyclic Jacobi eigendecomposition for a symmetric PSD matrix. The input is
// symmetrized as (M + M^T)/2 before iterating; asymmetry beyond
// 1e-12 * max(1, |M|_max) is rejected. Eigenvalues slightly negative from
// rounding (>= -1e-10 * spectral radius) are clamped to zero; anything more
// negative means the input was not PSD and raises NotPsd.
Spectrum sym_eig(const DenseMatrix& m);

// Number of eigenvalues strictly above rel_tol * lambda_max. A zero spectrum
// has rank 0. Requires rel_tol in (0, 1).
std::size_t numerical_rank(const Spectrum& spectrum, double rel_tol);

// Orthogonal projector onto the null space of m: P = U0 * U0^T where U0 are
// the eigenvectors with lambda <= rel_tol * lambda_max. For the zero matrix
// this is the identity.
DenseMatrix null_projector(const Spectrum& spectrum, double rel_tol);
DenseMatrix null_projector(const DenseMatrix& m, double rel_tol);

// Complement projector of an energy-truncated principal subspace: keeps the
// smallest leading eigenvector set whose eigenvalue sum reaches
// energy * sum(lambda) and returns P = I - U_kept * U_kept^T. This reproduces
// the usual truncated-subspace relaxation; unlike null_projector it lets
// updates touch low-energy directions that still carry data. Requires energy
// in (0, 1].
DenseMatrix lowrank_truncation_projector(const DenseMatrix& m, double energy);

} // namespace lrfr
