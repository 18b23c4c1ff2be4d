#pragma once

// Small dense symmetric linear algebra. Everything here is deterministic:
// fixed sweep orders, no threading, no randomized pivoting. Matrices are
// tiny (ambient dimension of a bandit instance, typically 2..10), so O(d^3)
// per call is not a concern; predictability is.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "doslb/errors.hpp"

namespace doslb {

using Vec = std::vector<double>;

struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a; // row-major, rows*cols entries

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    bool operator==(const Mat& o) const {
        return rows == o.rows && cols == o.cols && a == o.a;
    }
};

inline Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

inline Mat scaled_identity(int n, double s) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = s;
    return m;
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Mat& m) {
    for (double x : m.a)
        if (!std::isfinite(x)) return false;
    return true;
}

inline void require_finite(const Vec& v, const char* what) {
    if (!all_finite(v)) throw NonFiniteInput(std::string(what) + ": non-finite entry");
}

inline void require_finite(const Mat& m, const char* what) {
    if (!all_finite(m)) throw NonFiniteInput(std::string(what) + ": non-finite entry");
}

inline void require_square_symmetric(const Mat& m, const char* what) {
    if (m.rows != m.cols)
        throw DimensionMismatch(std::string(what) + ": matrix not square");
    require_finite(m, what);
    for (int i = 0; i < m.rows; ++i)
        for (int j = i + 1; j < m.cols; ++j)
            if (m(i, j) != m(j, i))
                throw NotSymmetric(std::string(what) + ": m(i,j) != m(j,i)");
}

inline double dot(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw DimensionMismatch("dot: size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

inline double norm1(const Vec& x) {
    double s = 0.0;
    for (double v : x) s += std::fabs(v);
    return s;
}

inline double norm_inf(const Vec& x) {
    double s = 0.0;
    for (double v : x) s = std::max(s, std::fabs(v));
    return s;
}

inline Vec matvec(const Mat& m, const Vec& x) {
    if (m.cols != static_cast<int>(x.size()))
        throw DimensionMismatch("matvec: size mismatch");
    Vec y(static_cast<size_t>(m.rows), 0.0);
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
        y[static_cast<size_t>(i)] = s;
    }
    return y;
}

inline Vec scaled(const Vec& x, double s) {
    Vec y = x;
    for (double& v : y) v *= s;
    return y;
}

inline Vec add(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw DimensionMismatch("add: size mismatch");
    Vec z = x;
    for (size_t i = 0; i < z.size(); ++i) z[i] += y[i];
    return z;
}

inline Vec sub(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw DimensionMismatch("sub: size mismatch");
    Vec z = x;
    for (size_t i = 0; i < z.size(); ++i) z[i] -= y[i];
    return z;
}

inline double frobenius_norm(const Mat& m) {
    double s = 0.0;
    for (double v : m.a) s += v * v;
    return std::sqrt(s);
}

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues (ascending) and the orthonormal eigenvector matrix Q with
// A = Q diag(w) Q^T. Convergence: off-diagonal Frobenius norm below
// 1e-12 relative to the matrix scale.
inline void jacobi_eigen(const Mat& m, Vec& w, Mat& q) {
    const int n = m.rows;
    Mat a = m;
    q = identity(n);
    const double scale = std::max(1.0, frobenius_norm(m));
    const double tol = 1e-12 * scale;
    const int max_sweeps = 64;

    auto off_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_norm() <= tol) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int qi = p + 1; qi < n; ++qi) {
                const double apq = a(p, qi);
                if (std::fabs(apq) <= tol / (n * n + 1.0)) continue;
                const double tau = (a(qi, qi) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, qi);
                    a(k, p) = c * akp - s * akq;
                    a(k, qi) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(qi, k);
                    a(p, k) = c * apk - s * aqk;
                    a(qi, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double qkp = q(k, p), qkq = q(k, qi);
                    q(k, p) = c * qkp - s * qkq;
                    q(k, qi) = s * qkp + c * qkq;
                }
            }
        }
    }
    if (off_norm() > tol * 10.0)
        throw NumericalFailure("jacobi_eigen: no convergence");

    w.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) w[static_cast<size_t>(i)] = a(i, i);

    // Deterministic ascending eigenvalue order.
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (w[static_cast<size_t>(idx[static_cast<size_t>(j)])] <
                w[static_cast<size_t>(idx[static_cast<size_t>(i)])])
                std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    Vec ws(static_cast<size_t>(n));
    Mat qs(n, n);
    for (int j = 0; j < n; ++j) {
        ws[static_cast<size_t>(j)] = w[static_cast<size_t>(idx[static_cast<size_t>(j)])];
        for (int i = 0; i < n; ++i) qs(i, j) = q(i, idx[static_cast<size_t>(j)]);
    }
    w = ws;
    q = qs;
}

// Builds Q diag(f(w)) Q^T symmetrized by construction (upper triangle
// computed once, mirrored), so downstream symmetry checks hold bit-exactly.
inline Mat assemble_symmetric(const Mat& q, const Vec& fw) {
    const int n = q.rows;
    Mat out(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k)
                s += q(i, k) * fw[static_cast<size_t>(k)] * q(j, k);
            out(i, j) = s;
            out(j, i) = s;
        }
    }
    return out;
}

} // namespace detail

// Symmetric factorization bundle for a positive definite matrix:
// the principal square root, its inverse, and the spectrum.
struct SpdFactorization {
    Mat source;
    Mat sqrt;
    Mat inv_sqrt;
    Vec eigenvalues; // ascending
};

// Principal square root of a symmetric positive definite matrix via cyclic
// Jacobi. Throws NotPositiveDefinite when the smallest eigenvalue is not
// clearly positive at the matrix scale.
inline SpdFactorization spd_sqrt(const Mat& m) {
    require_square_symmetric(m, "spd_sqrt");
    SpdFactorization f;
    f.source = m;
    Mat q;
    detail::jacobi_eigen(m, f.eigenvalues, q);
    const double scale = std::max(1.0, std::fabs(f.eigenvalues.back()));
    if (f.eigenvalues.front() <= 1e-12 * scale)
        throw NotPositiveDefinite("spd_sqrt: eigenvalue not positive");
    Vec sq(f.eigenvalues.size()), isq(f.eigenvalues.size());
    for (size_t i = 0; i < f.eigenvalues.size(); ++i) {
        sq[i] = std::sqrt(f.eigenvalues[i]);
        isq[i] = 1.0 / sq[i];
    }
    f.sqrt = detail::assemble_symmetric(q, sq);
    f.inv_sqrt = detail::assemble_symmetric(q, isq);
    return f;
}

// m + x x^T, computed on the upper triangle and mirrored so symmetry is
// preserved exactly.
inline Mat rank_one_update(const Mat& m, const Vec& x) {
    require_square_symmetric(m, "rank_one_update");
    if (m.rows != static_cast<int>(x.size()))
        throw DimensionMismatch("rank_one_update: size mismatch");
    require_finite(x, "rank_one_update");
    Mat out = m;
    for (int i = 0; i < m.rows; ++i)
        for (int j = i; j < m.cols; ++j) {
            const double v = m(i, j) + x[static_cast<size_t>(i)] * x[static_cast<size_t>(j)];
            out(i, j) = v;
            out(j, i) = v;
        }
    return out;
}

// sqrt(x^T m x) for symmetric positive semidefinite m. Small negative
// quadratic values from rounding are clamped to zero; anything clearly
// negative is an input error.
inline double weighted_norm(const Vec& x, const Mat& m) {
    require_square_symmetric(m, "weighted_norm");
    if (m.rows != static_cast<int>(x.size()))
        throw DimensionMismatch("weighted_norm: size mismatch");
    require_finite(x, "weighted_norm");
    double s = 0.0;
    for (int i = 0; i < m.rows; ++i) {
        double row = 0.0;
        for (int j = 0; j < m.cols; ++j) row += m(i, j) * x[static_cast<size_t>(j)];
        s += x[static_cast<size_t>(i)] * row;
    }
    const double scale = std::max(1.0, dot(x, x)) * std::max(1.0, frobenius_norm(m));
    if (s < -1e-9 * scale)
        throw NotPositiveDefinite("weighted_norm: negative quadratic form");
    return std::sqrt(std::max(0.0, s));
}

namespace detail {

// Cholesky m = L L^T, lower triangular. Returns false when a pivot is not
// positive at the matrix scale.
inline bool cholesky(const Mat& m, Mat& l) {
    const int n = m.rows;
    l = Mat(n, n);
    const double scale = std::max(1.0, frobenius_norm(m));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 1e-14 * scale) return false;
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return true;
}

// Solves a general square system a x = b by Gaussian elimination with
// partial pivoting. Returns false when the matrix is singular at scale.
inline bool solve_square(Mat a, Vec b, Vec& x) {
    const int n = a.rows;
    if (a.cols != n || static_cast<int>(b.size()) != n) return false;
    const double scale = std::max(1.0, frobenius_norm(a));
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
        if (std::fabs(a(piv, col)) <= 1e-12 * scale) return false;
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
            std::swap(b[static_cast<size_t>(piv)], b[static_cast<size_t>(col)]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            b[static_cast<size_t>(r)] -= f * b[static_cast<size_t>(col)];
        }
    }
    x.assign(static_cast<size_t>(n), 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[static_cast<size_t>(r)];
        for (int c = r + 1; c < n; ++c) s -= a(r, c) * x[static_cast<size_t>(c)];
        x[static_cast<size_t>(r)] = s / a(r, r);
    }
    return true;
}

} // namespace detail

// Solves m y = b for symmetric positive definite m via Cholesky.
inline Vec solve_spd(const Mat& m, const Vec& b) {
    require_square_symmetric(m, "solve_spd");
    if (m.rows != static_cast<int>(b.size()))
        throw DimensionMismatch("solve_spd: size mismatch");
    require_finite(b, "solve_spd");
    Mat l;
    if (!detail::cholesky(m, l))
        throw NotPositiveDefinite("solve_spd: matrix not positive definite");
    const int n = m.rows;
    Vec y(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double s = b[static_cast<size_t>(i)];
        for (int k = 0; k < i; ++k) s -= l(i, k) * y[static_cast<size_t>(k)];
        y[static_cast<size_t>(i)] = s / l(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = y[static_cast<size_t>(i)];
        for (int k = i + 1; k < n; ++k) s -= l(k, i) * y[static_cast<size_t>(k)];
        y[static_cast<size_t>(i)] = s / l(i, i);
    }
    return y;
}

// log determinant of a symmetric positive definite matrix. Cholesky based,
// which keeps this path independent from the Jacobi spectrum and lets tests
// cross-check the two.
inline double log_det(const Mat& m) {
    require_square_symmetric(m, "log_det");
    Mat l;
    if (!detail::cholesky(m, l))
        throw NotPositiveDefinite("log_det: matrix not positive definite");
    double s = 0.0;
    for (int i = 0; i < m.rows; ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

} // namespace doslb
