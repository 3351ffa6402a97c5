#include "pkge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "pkge/errors.hpp"

namespace pkge::linalg {

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool DenseMatrix::all_finite() const {
    for (double x : data) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.cols) +
                         " vs " + std::to_string(b.rows) + ")");
    }
    DenseMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

void rotate_row(const double* x, const DenseMatrix& r, double* out) {
    for (std::size_t c = 0; c < r.cols; ++c) out[c] = 0.0;
    for (std::size_t k = 0; k < r.rows; ++k) {
        const double xk = x[k];
        const double* rrow = r.row_ptr(k);
        for (std::size_t c = 0; c < r.cols; ++c) out[c] += xk * rrow[c];
    }
}

double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (double x : a.data) s += x * x;
    return std::sqrt(s);
}

double frobenius_distance(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw ShapeError("frobenius_distance: shape mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return std::sqrt(s);
}

namespace {

constexpr int kSvdSweepCap = 100;
constexpr double kSvdRelTol = 1e-14;

// Column dot product over a k x k matrix.
double col_dot(const DenseMatrix& m, std::size_t p, std::size_t q) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) s += m(i, p) * m(i, q);
    return s;
}

void rotate_cols(DenseMatrix& m, std::size_t p, std::size_t q, double c, double s) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double mp = m(i, p);
        const double mq = m(i, q);
        m(i, p) = c * mp - s * mq;
        m(i, q) = s * mp + c * mq;
    }
}

}  // namespace

SvdResult svd_square(const DenseMatrix& a) {
    if (a.rows != a.cols) {
        throw ShapeError("svd_square: input is " + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + ", expected square");
    }
    const std::size_t k = a.rows;
    if (k == 0 || k > 128) {
        throw ShapeError("svd_square: order " + std::to_string(k) + " outside [1, 128]");
    }
    if (!a.all_finite()) {
        throw NumericError("svd_square: non-finite entries in input");
    }

    DenseMatrix b = a;  // columns get orthogonalised in place
    DenseMatrix v = DenseMatrix::identity(k);

    // Columns this small carry singular values below resolution; rotating
    // them against healthy columns never converges in floating point.
    const double fro = frobenius_norm(a);
    const double dead_col = (1e-15 * fro) * (1e-15 * fro);

    bool converged = false;
    for (int sweep = 0; sweep < kSvdSweepCap && !converged; ++sweep) {
        converged = true;
        for (std::size_t p = 0; p + 1 < k; ++p) {
            for (std::size_t q = p + 1; q < k; ++q) {
                const double alpha = col_dot(b, p, p);
                const double beta = col_dot(b, q, q);
                if (alpha <= dead_col || beta <= dead_col) continue;
                const double gamma = col_dot(b, p, q);
                if (std::abs(gamma) <= kSvdRelTol * std::sqrt(alpha * beta)) continue;
                converged = false;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate_cols(b, p, q, c, s);
                rotate_cols(v, p, q, c, s);
            }
        }
    }
    if (!converged) {
        throw NumericError("svd_square: no convergence within " +
                           std::to_string(kSvdSweepCap) + " sweeps");
    }

    std::vector<double> sigma(k);
    for (std::size_t j = 0; j < k; ++j) sigma[j] = std::sqrt(col_dot(b, j, j));

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SvdResult res;
    res.u = DenseMatrix(k, k);
    res.v = DenseMatrix(k, k);
    res.sigma.resize(k);
    const double sigma_max = sigma[order[0]];
    const double zero_tol = std::max(sigma_max * 1e-14, fro * 1e-15);

    std::size_t n_nonzero = 0;
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t src = order[j];
        res.sigma[j] = sigma[src];
        for (std::size_t i = 0; i < k; ++i) res.v(i, j) = v(i, src);
        if (sigma[src] > zero_tol && sigma[src] > 0.0) {
            for (std::size_t i = 0; i < k; ++i) res.u(i, j) = b(i, src) / sigma[src];
            n_nonzero = j + 1;
        }
    }

    // Complete U with an orthonormal basis for the null-space columns.
    for (std::size_t j = n_nonzero; j < k; ++j) {
        res.sigma[j] = sigma[order[j]];  // may be a tiny positive value; keep it
        for (std::size_t cand = 0; cand < k; ++cand) {
            std::vector<double> col(k, 0.0);
            col[cand] = 1.0;
            for (std::size_t prev = 0; prev < j; ++prev) {
                double proj = 0.0;
                for (std::size_t i = 0; i < k; ++i) proj += col[i] * res.u(i, prev);
                for (std::size_t i = 0; i < k; ++i) col[i] -= proj * res.u(i, prev);
            }
            double norm = 0.0;
            for (double x : col) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 0.5) {  // canonical basis vector survives orthogonalisation
                for (std::size_t i = 0; i < k; ++i) res.u(i, j) = col[i] / norm;
                break;
            }
        }
    }
    return res;
}

EigResult sym_eig_top_k(const DenseMatrix& a, std::size_t k) {
    if (a.rows != a.cols) {
        throw ShapeError("sym_eig_top_k: input not square");
    }
    const std::size_t n = a.rows;
    if (k > n) {
        throw ShapeError("sym_eig_top_k: k exceeds matrix order");
    }
    double max_abs = 0.0;
    for (double x : a.data) max_abs = std::max(max_abs, std::abs(x));
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            asym = std::max(asym, std::abs(a(i, j) - a(j, i)));
    if (asym > 1e-12 * std::max(1.0, max_abs)) {
        throw ContractError("sym_eig_top_k: input asymmetric beyond tolerance");
    }

    DenseMatrix m = a;
    DenseMatrix v = DenseMatrix::identity(n);
    const double off_tol = 1e-14 * std::max(1.0, max_abs);

    for (int sweep = 0; sweep < kSvdSweepCap; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::abs(m(i, j)));
        if (off <= off_tol) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (std::abs(apq) <= off_tol) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double mip = m(i, p);
                    const double miq = m(i, q);
                    m(i, p) = c * mip - s * miq;
                    m(i, q) = s * mip + c * miq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double mpi = m(p, i);
                    const double mqi = m(q, i);
                    m(p, i) = c * mpi - s * mqi;
                    m(q, i) = s * mpi + c * mqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return m(x, x) > m(y, y); });

    EigResult res;
    res.values.resize(k);
    res.vectors = DenseMatrix(n, k);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t src = order[j];
        res.values[j] = m(src, src);
        for (std::size_t i = 0; i < n; ++i) res.vectors(i, j) = v(i, src);
    }
    return res;
}

DenseMatrix random_orthogonal(std::size_t k, std::uint64_t seed) {
    if (k == 0) {
        throw ShapeError("random_orthogonal: order must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int attempt = 0; attempt < 16; ++attempt) {
        DenseMatrix g(k, k);
        for (double& x : g.data) x = gauss(rng);
        // Modified Gram-Schmidt on columns; R_jj > 0 keeps the Haar sign convention.
        DenseMatrix q = g;
        bool ok = true;
        for (std::size_t j = 0; j < k && ok; ++j) {
            for (std::size_t p = 0; p < j; ++p) {
                double proj = 0.0;
                for (std::size_t i = 0; i < k; ++i) proj += q(i, j) * q(i, p);
                for (std::size_t i = 0; i < k; ++i) q(i, j) -= proj * q(i, p);
            }
            double norm = 0.0;
            for (std::size_t i = 0; i < k; ++i) norm += q(i, j) * q(i, j);
            norm = std::sqrt(norm);
            if (norm <= 1e-12) {
                ok = false;
                break;
            }
            for (std::size_t i = 0; i < k; ++i) q(i, j) /= norm;
        }
        if (ok) return q;
    }
    throw NumericError("random_orthogonal: repeated rank-deficient Gaussian draws");
}

}  // namespace pkge::linalg
