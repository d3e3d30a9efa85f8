#include "ncbf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ncbf::linalg {

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

double norm_inf(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Vector matvec(const Matrix& A, const Vector& x) {
  Vector y(A.rows(), 0.0);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < A.cols(); ++j) s += A(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Vector matvec_transpose(const Matrix& A, const Vector& x) {
  Vector y(A.cols(), 0.0);
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) y[j] += A(i, j) * x[i];
  return y;
}

Vector lu_solve(Matrix A, Vector b) {
  const std::size_t n = A.rows();
  if (A.cols() != n || b.size() != n)
    throw PreconditionViolated("lu_solve: dimension mismatch");

  double amax = 0.0;
  for (double x : A.data()) amax = std::max(amax, std::abs(x));
  const double tiny = 1e-14 * amax;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(A(perm[k], k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double cand = std::abs(A(perm[i], k));
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    if (!(best > tiny) || !std::isfinite(best))
      throw SingularMatrix("lu_solve: pivot below threshold at column " + std::to_string(k));
    std::swap(perm[k], perm[piv]);

    const double pivot = A(perm[k], k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = A(perm[i], k) / pivot;
      A(perm[i], k) = l;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) A(perm[i], j) -= l * A(perm[k], j);
    }
  }

  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[perm[i]];
    for (std::size_t j = 0; j < i; ++j) s -= A(perm[i], j) * y[j];
    y[i] = s;
  }
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= A(perm[ii], j) * x[j];
    x[ii] = s / A(perm[ii], ii);
  }
  return x;
}

bool is_positive_definite(const Matrix& A) {
  const std::size_t n = A.rows();
  if (A.cols() != n) return false;
  Matrix L(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = A(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= L(j, k) * L(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    L(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = A(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
      if (!std::isfinite(L(i, j))) return false;
    }
  }
  return true;
}

std::vector<double> symmetric_eigenvalues(Matrix A) {
  const std::size_t n = A.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
    if (off < 1e-30) break;
    for (std::size_t pp = 0; pp < n; ++pp) {
      for (std::size_t q = pp + 1; q < n; ++q) {
        if (A(pp, q) == 0.0) continue;
        const double theta = (A(q, q) - A(pp, pp)) / (2.0 * A(pp, q));
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = A(k, pp), akq = A(k, q);
          A(k, pp) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = A(pp, k), aqk = A(q, k);
          A(pp, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = A(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace ncbf::linalg
