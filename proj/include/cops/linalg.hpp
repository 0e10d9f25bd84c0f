#ifndef COPS_LINALG_HPP
#define COPS_LINALG_HPP

// Small dense linear algebra, sized for the d <= ~20 problems this library
// works with: row-major matrix, elimination with partial pivoting, cyclic
// Jacobi eigenvalues for symmetric matrices, Haar-random orthogonal factors.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "cops/errors.hpp"
#include "cops/random.hpp"

namespace cops {

class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw contract_error("Matrix: negative dimensions");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  std::span<const double> flat() const { return data_; }
  std::span<double> flat() { return data_; }

  bool operator==(const Matrix& other) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline std::vector<double> mat_vec(const Matrix& a, std::span<const double> x) {
  std::vector<double> y(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

/// x^T A x.
inline double quad_form(const Matrix& a, std::span<const double> x) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) s += x[i] * a(i, j) * x[j];
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double max_abs_entry(const Matrix& a) {
  double m = 0.0;
  for (double v : a.flat()) m = std::max(m, std::abs(v));
  return m;
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
///
/// Returns nullopt when a pivot's magnitude falls below
/// pivot_rel_tol * max(1, max |A_ij|); callers decide what singular means.
inline std::optional<std::vector<double>> solve_partial_pivot(Matrix a, std::vector<double> b,
                                                              double pivot_rel_tol = 1e-9) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(b.size()) != n)
    throw contract_error("solve_partial_pivot: dimension mismatch");
  const double pivot_floor = pivot_rel_tol * std::max(1.0, max_abs_entry(a));

  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    if (std::abs(a(p, k)) < pivot_floor) return std::nullopt;
    if (p != k) {
      for (int j = k; j < n; ++j) std::swap(a(k, j), a(p, j));
      std::swap(b[k], b[p]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double m = a(i, k) / a(k, k);
      if (m == 0.0) continue;
      for (int j = k; j < n; ++j) a(i, j) -= m * a(k, j);
      b[i] -= m * b[k];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> symmetric_eigenvalues(Matrix a) {
  const int n = a.rows();
  if (a.cols() != n) throw contract_error("symmetric_eigenvalues: matrix not square");

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30 * std::max(1.0, max_abs_entry(a))) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

/// Spectral norm of a symmetric matrix.
inline double symmetric_spectral_norm(const Matrix& a) {
  double m = 0.0;
  for (double v : symmetric_eigenvalues(a)) m = std::max(m, std::abs(v));
  return m;
}

/// Haar-distributed random orthogonal matrix: Gram-Schmidt orthonormalization
/// of a Gaussian matrix (the R diagonal comes out positive, which is the
/// convention that makes Q exactly Haar).
inline Matrix random_orthogonal(int n, RandomStream& stream) {
  Matrix q(n, n);
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (double& v : q.flat()) v = stream.next_gaussian();
    // modified Gram-Schmidt on columns
    bool dependent = false;
    for (int j = 0; j < n && !dependent; ++j) {
      for (int k = 0; k < j; ++k) {
        double proj = 0.0;
        for (int i = 0; i < n; ++i) proj += q(i, k) * q(i, j);
        for (int i = 0; i < n; ++i) q(i, j) -= proj * q(i, k);
      }
      double nrm = 0.0;
      for (int i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
      nrm = std::sqrt(nrm);
      if (nrm < 1e-8) {
        dependent = true;
        break;
      }
      for (int i = 0; i < n; ++i) q(i, j) /= nrm;
    }
    if (!dependent) return q;
  }
  throw contract_error("random_orthogonal: degenerate Gaussian draws");
}

}  // namespace cops

#endif  // COPS_LINALG_HPP
