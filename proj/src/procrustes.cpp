#include "pkge/procrustes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pkge/errors.hpp"

namespace pkge::procrustes {

RelationSet::RelationSet(std::size_t relations, std::size_t n_subspaces,
                         std::size_t sub_dim)
    : m(relations), subspaces(n_subspaces), d_s(sub_dim) {
    matrices.assign(m * subspaces, DenseMatrix::identity(d_s));
}

double RelationSet::max_defect() const {
    double worst = 0.0;
    for (const DenseMatrix& r : matrices) worst = std::max(worst, orthogonality_defect(r));
    return worst;
}

DenseMatrix solve_opa(const DenseMatrix& h, const DenseMatrix& t) {
    if (h.cols != t.cols || h.rows != t.rows) {
        throw ShapeError("solve_opa: h is " + std::to_string(h.rows) + "x" +
                         std::to_string(h.cols) + ", t is " + std::to_string(t.rows) +
                         "x" + std::to_string(t.cols));
    }
    const std::size_t d_s = h.cols;
    if (h.rows == 0) return DenseMatrix::identity(d_s);

    // H^T T without materialising the transpose.
    DenseMatrix cross(d_s, d_s);
    for (std::size_t n = 0; n < h.rows; ++n) {
        const double* hrow = h.row_ptr(n);
        const double* trow = t.row_ptr(n);
        for (std::size_t i = 0; i < d_s; ++i) {
            const double hi = hrow[i];
            if (hi == 0.0) continue;
            double* crow = cross.row_ptr(i);
            for (std::size_t j = 0; j < d_s; ++j) crow[j] += hi * trow[j];
        }
    }

    const linalg::SvdResult svd = linalg::svd_square(cross);
    DenseMatrix r(d_s, d_s);
    for (std::size_t i = 0; i < d_s; ++i)
        for (std::size_t j = 0; j < d_s; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d_s; ++k) s += svd.u(i, k) * svd.v(j, k);
            r(i, j) = s;
        }
    return r;
}

DenseMatrix gram_schmidt(const DenseMatrix& s) {
    if (s.rows > s.cols) {
        throw ShapeError("gram_schmidt: " + std::to_string(s.rows) +
                         " rows exceed dimension " + std::to_string(s.cols));
    }
    DenseMatrix q = s;
    const std::size_t d = s.cols;
    for (std::size_t i = 0; i < s.rows; ++i) {
        double* qi = q.row_ptr(i);
        for (std::size_t j = 0; j < i; ++j) {
            const double* qj = q.row_ptr(j);
            double proj = 0.0;
            for (std::size_t c = 0; c < d; ++c) proj += qi[c] * qj[c];
            for (std::size_t c = 0; c < d; ++c) qi[c] -= proj * qj[c];
        }
        double norm = 0.0;
        for (std::size_t c = 0; c < d; ++c) norm += qi[c] * qi[c];
        norm = std::sqrt(norm);
        if (norm <= 1e-12) {
            throw DegeneracyError("gram_schmidt: row " + std::to_string(i) +
                                  " is numerically dependent on earlier rows");
        }
        for (std::size_t c = 0; c < d; ++c) qi[c] /= norm;
    }
    return q;
}

double orthogonality_defect(const DenseMatrix& r) {
    if (r.rows != r.cols) {
        throw ShapeError("orthogonality_defect: input not square");
    }
    const std::size_t k = r.rows;
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double dot = 0.0;
            for (std::size_t n = 0; n < k; ++n) dot += r(n, i) * r(n, j);
            const double target = i == j ? 1.0 : 0.0;
            const double diff = dot - target;
            sum += diff * diff;
        }
    }
    return std::sqrt(sum);
}

}  // namespace pkge::procrustes
