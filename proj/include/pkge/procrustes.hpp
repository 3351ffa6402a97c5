#pragma once

#include <cstddef>
#include <vector>

#include "pkge/linalg.hpp"

namespace pkge::procrustes {

using linalg::DenseMatrix;

/// m x (d/d_s) grid of orthogonal d_s x d_s relation matrices.
struct RelationSet {
    std::size_t m = 0;
    std::size_t subspaces = 0;
    std::size_t d_s = 0;
    std::vector<DenseMatrix> matrices;  // row-major over (relation, subspace)

    RelationSet() = default;
    RelationSet(std::size_t relations, std::size_t n_subspaces, std::size_t sub_dim);

    DenseMatrix& at(std::size_t relation, std::size_t subspace) {
        return matrices[relation * subspaces + subspace];
    }
    const DenseMatrix& at(std::size_t relation, std::size_t subspace) const {
        return matrices[relation * subspaces + subspace];
    }

    /// Largest ||R^T R - I||_F over all cells.
    double max_defect() const;
};

/// Closed-form solution of min_R ||h R - t||_F over orthogonal R.
/// Empty inputs (n = 0) return the identity.
DenseMatrix solve_opa(const DenseMatrix& h, const DenseMatrix& t);

/// Row-wise Gram-Schmidt; throws DegeneracyError on rank-deficient input.
DenseMatrix gram_schmidt(const DenseMatrix& s);

/// ||r^T r - I||_F for square r.
double orthogonality_defect(const DenseMatrix& r);

}  // namespace pkge::procrustes
