#include "ncbf/cbf.hpp"

#include <cmath>

namespace ncbf::cbf {

using linalg::dot;
using linalg::matvec;
using linalg::matvec_transpose;
using linalg::norm2;

namespace {

constexpr double kDegenerateNorm = 1e-12;

Vector shifted(const Vector& zeta, const Vector& d) {
  Vector out(zeta.size());
  for (std::size_t i = 0; i < zeta.size(); ++i) out[i] = zeta[i] + d[i];
  return out;
}

// L_g h as a q-vector: (grad h)' g(zeta).
Vector lie_along_g(const Matrix& g, const Vector& grad) {
  return matvec_transpose(g, grad);
}

}  // namespace

void ClfParams::validate() const {
  const std::size_t n = Z.rows();
  if (Z.cols() != n || zeta_d.size() != n)
    throw PreconditionViolated("ClfParams: Z must be n x n with n = |zeta_d|");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(Z(i, j) - Z(j, i)) > 1e-12)
        throw PreconditionViolated("ClfParams: Z asymmetric beyond 1e-12");
  if (!linalg::is_positive_definite(Z))
    throw PreconditionViolated("ClfParams: Z is not positive definite");
  const auto eig = linalg::symmetric_eigenvalues(Z);
  if (chi1 > eig.front() + 1e-12)
    throw PreconditionViolated("ClfParams: chi1 exceeds lambda_min(Z)");
  if (chi2 < eig.back() - 1e-12)
    throw PreconditionViolated("ClfParams: chi2 below lambda_max(Z)");
  if (chi3 <= 0.0) throw PreconditionViolated("ClfParams: chi3 must be positive");
  if (p <= 0.0) throw PreconditionViolated("ClfParams: p must be positive");
}

double ncbf_value(double theta_val, const Vector& zeta, const NcbfParams& prm) {
  const Vector sh = shifted(zeta, prm.d);
  const double nrm = norm2(sh);
  if (nrm < kDegenerateNorm)
    throw DegenerateState("ncbf_value: |zeta + d| below 1e-12");
  return std::exp(theta_val / (nrm + prm.r) - prm.delta) - 1.0;
}

Vector ncbf_gradient(const AffineSystem& sys, const SafetyFunction& sf, const Vector& zeta,
                     const NcbfParams& prm) {
  (void)sys;
  const Vector sh = shifted(zeta, prm.d);
  const double nrm = norm2(sh);
  if (nrm < kDegenerateNorm)
    throw DegenerateState("ncbf_gradient: |zeta + d| below 1e-12");
  const double w = nrm + prm.r;
  const double theta_val = sf.value(zeta);
  const double big_theta = std::exp(theta_val / w - prm.delta) - 1.0;
  const Vector grad_theta = sf.gradient(zeta);

  Vector grad(zeta.size());
  const double scale = (big_theta + 1.0) / (w * w);
  for (std::size_t i = 0; i < zeta.size(); ++i)
    grad[i] = scale * (w * grad_theta[i] - theta_val * sh[i] / nrm);
  return grad;
}

ConstraintRow ncbf_constraint_row(const AffineSystem& sys, const SafetyFunction& sf,
                                  const Vector& zeta, const NcbfParams& prm) {
  const Vector grad = ncbf_gradient(sys, sf, zeta, prm);
  const double big_theta = ncbf_value(sf.value(zeta), zeta, prm);
  const double lf = dot(grad, sys.f(zeta));
  const Vector lg = lie_along_g(sys.g(zeta), grad);

  ConstraintRow row;
  row.a.assign(sys.q + 1, 0.0);
  for (std::size_t j = 0; j < sys.q; ++j) row.a[j] = -lg[j];
  row.b = lf + prm.K * big_theta;
  row.label = "barrier";
  return row;
}

double clf_value(const ClfParams& clf, const Vector& zeta) {
  Vector e(zeta.size());
  for (std::size_t i = 0; i < zeta.size(); ++i) e[i] = zeta[i] - clf.zeta_d[i];
  return dot(e, matvec(clf.Z, e));
}

Vector clf_gradient(const ClfParams& clf, const Vector& zeta) {
  Vector e(zeta.size());
  for (std::size_t i = 0; i < zeta.size(); ++i) e[i] = zeta[i] - clf.zeta_d[i];
  Vector g = matvec(clf.Z, e);
  for (double& x : g) x *= 2.0;
  return g;
}

ConstraintRow clf_constraint_row(const AffineSystem& sys, const ClfParams& clf,
                                 const Vector& zeta) {
  const Vector grad = clf_gradient(clf, zeta);
  const double value = clf_value(clf, zeta);
  const double lf = dot(grad, sys.f(zeta));
  const Vector lg = lie_along_g(sys.g(zeta), grad);

  ConstraintRow row;
  row.a.assign(sys.q + 1, 0.0);
  for (std::size_t j = 0; j < sys.q; ++j) row.a[j] = lg[j];
  row.a[sys.q] = -1.0;
  row.b = -lf - clf.chi3 * value;
  row.label = "clf";
  return row;
}

ConstraintRow rd1_cbf_row(const SafetyFunction& sf, const AffineSystem& sys,
                          const Vector& zeta, double alpha_gain) {
  const Vector grad = sf.gradient(zeta);
  const Vector lg = lie_along_g(sys.g(zeta), grad);
  if (sf.relative_degree != 1 || linalg::norm_inf(lg) == 0.0)
    throw RelativeDegreeMismatch("rd1_cbf_row: constraint is not relative degree 1 here");
  const double lf = dot(grad, sys.f(zeta));

  ConstraintRow row;
  row.a.assign(sys.q + 1, 0.0);
  for (std::size_t j = 0; j < sys.q; ++j) row.a[j] = -lg[j];
  row.b = lf + alpha_gain * sf.value(zeta);
  row.label = "rd1_cbf";
  return row;
}

ConstraintRow hocbf_constraint_row(const AffineSystem& sys, const SafetyFunction& sf,
                                   const Vector& zeta, std::pair<double, double> gains) {
  if (sf.relative_degree != 2)
    throw RelativeDegreeMismatch("hocbf_constraint_row: needs a relative-degree-2 constraint");
  const auto [k1, k2] = gains;
  if (k1 <= 0.0 || k2 <= 0.0)
    throw PreconditionViolated("hocbf_constraint_row: gains must be positive");

  const double h = sf.value(zeta);
  auto hdot = [&](const Vector& x) { return dot(sf.gradient(x), sys.f(x)); };
  const double w = hdot(zeta);

  const double fd_step = 1e-6;
  Vector grad_w(zeta.size());
  for (std::size_t i = 0; i < zeta.size(); ++i) {
    Vector hi = zeta, lo = zeta;
    hi[i] += fd_step;
    lo[i] -= fd_step;
    grad_w[i] = (hdot(hi) - hdot(lo)) / (2.0 * fd_step);
  }

  const double lf_w = dot(grad_w, sys.f(zeta));
  const Vector lg_w = lie_along_g(sys.g(zeta), grad_w);
  if (linalg::norm_inf(lg_w) == 0.0)
    throw RelativeDegreeMismatch("hocbf_constraint_row: control does not reach h_ddot");

  ConstraintRow row;
  row.a.assign(sys.q + 1, 0.0);
  for (std::size_t j = 0; j < sys.q; ++j) row.a[j] = -lg_w[j];
  row.b = lf_w + (k1 + k2) * w + k1 * k2 * h;
  row.label = "hocbf";
  return row;
}

std::vector<ConstraintRow> input_bound_rows(const ControlBounds& bounds, std::size_t q) {
  if (bounds.v_min.size() != q || bounds.v_max.size() != q)
    throw PreconditionViolated("input_bound_rows: bounds must have q components");
  std::vector<ConstraintRow> rows;
  rows.reserve(2 * q);
  for (std::size_t j = 0; j < q; ++j) {
    ConstraintRow hi;
    hi.a.assign(q + 1, 0.0);
    hi.a[j] = 1.0;
    hi.b = bounds.v_max[j];
    hi.label = "u_max_" + std::to_string(j);
    rows.push_back(std::move(hi));

    ConstraintRow lo;
    lo.a.assign(q + 1, 0.0);
    lo.a[j] = -1.0;
    lo.b = -bounds.v_min[j];
    lo.label = "u_min_" + std::to_string(j);
    rows.push_back(std::move(lo));
  }
  return rows;
}

}  // namespace ncbf::cbf
