#include "lrfr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lrfr/errors.hpp"

namespace lrfr {
namespace {

constexpr int kMaxSweeps = 100;
constexpr double kSweepTol = 1e-12;     // off-diagonal Frobenius threshold, relative to |m|_F
constexpr double kSymmetryTol = 1e-12;  // allowed asymmetry, relative to max(1, |m|_max)
constexpr double kPsdTol = 1e-10;       // clamp window for rounding-level negative eigenvalues

double offdiag_norm(const DenseMatrix& a) {
    double sum = 0.0;
    const std::size_t n = a.rows();
    for (std::size_t p = 0; p + 1 < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) sum += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(sum);
}

double frobenius_norm(const DenseMatrix& a) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a.data()[i] * a.data()[i];
    return std::sqrt(sum);
}

// Builds the projector sum_{c in cols} u_c u_c^T from eigenvector columns.
// Only the upper triangle is computed and mirrored, so the result is
// symmetric exactly.
DenseMatrix outer_product_sum(const DenseMatrix& q, const std::vector<std::size_t>& cols) {
    const std::size_t n = q.rows();
    DenseMatrix p(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t c : cols) sum += q(i, c) * q(j, c);
            p(i, j) = sum;
            p(j, i) = sum;
        }
    }
    return p;
}

} // namespace

Spectrum sym_eig(const DenseMatrix& m) {
    if (m.rows() != m.cols()) fail(Errc::NotSquare, "sym_eig: matrix is not square");
    if (!m.all_finite()) fail(Errc::NotFinite, "sym_eig: matrix contains NaN or Inf");
    const std::size_t n = m.rows();

    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            asym = std::max(asym, std::fabs(m(i, j) - m(j, i)));
    if (asym > kSymmetryTol * std::max(1.0, m.max_abs()))
        fail(Errc::NotSymmetric, "sym_eig: matrix is not symmetric");

    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
    DenseMatrix q = DenseMatrix::identity(n);

    const double stop = kSweepTol * frobenius_norm(a);
    bool converged = offdiag_norm(a) <= stop;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const double apr = a(p, r);
                if (apr == 0.0) continue;
                const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                const double app = a(p, p);
                const double arr = a(r, r);
                a(p, p) = app - t * apr;
                a(r, r) = arr + t * apr;
                a(p, r) = 0.0;
                a(r, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == r) continue;
                    const double akp = a(k, p);
                    const double akr = a(k, r);
                    a(k, p) = c * akp - s * akr;
                    a(p, k) = a(k, p);
                    a(k, r) = s * akp + c * akr;
                    a(r, k) = a(k, r);
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p);
                    const double qkr = q(k, r);
                    q(k, p) = c * qkp - s * qkr;
                    q(k, r) = s * qkp + c * qkr;
                }
            }
        }
        converged = offdiag_norm(a) <= stop;
    }
    if (!converged) fail(Errc::EigFailure, "sym_eig: Jacobi iteration did not converge");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    Spectrum s;
    s.eigenvalues.resize(n);
    s.eigenvectors = DenseMatrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        s.eigenvalues[c] = a(order[c], order[c]);
        for (std::size_t i = 0; i < n; ++i) s.eigenvectors(i, c) = q(i, order[c]);
    }

    double radius = 0.0;
    for (double v : s.eigenvalues) radius = std::max(radius, std::fabs(v));
    for (double& v : s.eigenvalues) {
        if (v < 0.0) {
            if (v < -kPsdTol * radius)
                fail(Errc::NotPsd, "sym_eig: matrix has a significantly negative eigenvalue");
            v = 0.0;
        }
    }
    return s;
}

std::size_t numerical_rank(const Spectrum& spectrum, double rel_tol) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
        fail(Errc::InvalidSpec, "numerical_rank: rel_tol must be in (0,1)");
    if (spectrum.eigenvalues.empty()) return 0;
    const double lambda_max = spectrum.eigenvalues.front();
    if (lambda_max <= 0.0) return 0;
    std::size_t rank = 0;
    for (double v : spectrum.eigenvalues)
        if (v > rel_tol * lambda_max) ++rank;
    return rank;
}

DenseMatrix null_projector(const Spectrum& spectrum, double rel_tol) {
    const std::size_t n = spectrum.eigenvectors.rows();
    const double lambda_max = spectrum.eigenvalues.empty() ? 0.0 : spectrum.eigenvalues.front();
    std::vector<std::size_t> null_cols;
    for (std::size_t c = 0; c < spectrum.eigenvalues.size(); ++c)
        if (lambda_max <= 0.0 || spectrum.eigenvalues[c] <= rel_tol * lambda_max)
            null_cols.push_back(c);
    if (null_cols.size() == n) return DenseMatrix::identity(n);
    return outer_product_sum(spectrum.eigenvectors, null_cols);
}

DenseMatrix null_projector(const DenseMatrix& m, double rel_tol) {
    return null_projector(sym_eig(m), rel_tol);
}

DenseMatrix lowrank_truncation_projector(const DenseMatrix& m, double energy) {
    if (!(energy > 0.0 && energy <= 1.0))
        fail(Errc::InvalidSpec, "lowrank_truncation_projector: energy must be in (0,1]");
    const Spectrum s = sym_eig(m);
    const std::size_t n = s.eigenvectors.rows();

    const double total = std::accumulate(s.eigenvalues.begin(), s.eigenvalues.end(), 0.0);
    std::vector<std::size_t> kept;
    if (total > 0.0) {
        const double target = energy * total;
        const double fuzz = 1e-12 * total;
        double cum = 0.0;
        for (std::size_t c = 0; c < n && cum + fuzz < target && s.eigenvalues[c] > 0.0; ++c) {
            cum += s.eigenvalues[c];
            kept.push_back(c);
        }
    }
    if (kept.empty()) return DenseMatrix::identity(n);

    DenseMatrix span = outer_product_sum(s.eigenvectors, kept);
    DenseMatrix p(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) p(i, j) = (i == j ? 1.0 : 0.0) - span(i, j);
    return p;
}

} // namespace lrfr
