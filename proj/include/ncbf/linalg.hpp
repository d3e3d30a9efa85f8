#pragma once

#include <cstddef>
#include <vector>

#include "ncbf/errors.hpp"

namespace ncbf::linalg {

using Vector = std::vector<double>;

// Dense row-major real matrix. Just enough for the KKT systems and the
// small per-step control QPs; no attempt at BLAS-grade performance.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
double norm_inf(const Vector& v);

// y = A x
Vector matvec(const Matrix& A, const Vector& x);
// y = A^T x
Vector matvec_transpose(const Matrix& A, const Vector& x);

// Solves A x = b by LU factorization with partial pivoting. A pivot column
// whose largest remaining entry is below 1e-14 * max|A| counts as singular.
Vector lu_solve(Matrix A, Vector b);

// Cholesky probe; also fails on non-finite entries.
bool is_positive_definite(const Matrix& A);

// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
std::vector<double> symmetric_eigenvalues(Matrix A);

}  // namespace ncbf::linalg
