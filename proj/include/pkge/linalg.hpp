#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pkge::linalg {

/// Row-major dense matrix of doubles; the universal numeric carrier.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row_ptr(std::size_t i) { return data.data() + i * cols; }
    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

    static DenseMatrix identity(std::size_t n);

    bool all_finite() const;
};

struct SvdResult {
    DenseMatrix u;              // k x k, orthogonal
    std::vector<double> sigma;  // length k, non-negative, non-increasing
    DenseMatrix v;              // k x k, orthogonal
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

/// out[c] = sum_k x[k] * r(k, c). Shared by every scoring / rotation path so
/// that batched evaluation reproduces the scalar score bit for bit.
void rotate_row(const double* x, const DenseMatrix& r, double* out);

double frobenius_norm(const DenseMatrix& a);
double frobenius_distance(const DenseMatrix& a, const DenseMatrix& b);

/// One-sided Jacobi SVD for square matrices up to 128x128.
SvdResult svd_square(const DenseMatrix& a);

struct EigResult {
    std::vector<double> values;  // length k, non-increasing
    DenseMatrix vectors;         // n x k, orthonormal columns
};

/// Top-k eigenpairs of a symmetric matrix (cyclic Jacobi).
EigResult sym_eig_top_k(const DenseMatrix& a, std::size_t k);

/// Haar-like random orthogonal matrix; deterministic per seed.
DenseMatrix random_orthogonal(std::size_t k, std::uint64_t seed);

}  // namespace pkge::linalg
