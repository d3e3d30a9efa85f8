#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ncbf/linalg.hpp"

namespace ncbf::cbf {

using linalg::Matrix;
using linalg::Vector;

// Control-affine dynamics  zeta_dot = f(zeta) + g(zeta) u,  u in R^q.
struct AffineSystem {
  std::size_t n = 0;
  std::size_t q = 0;
  std::function<Vector(const Vector&)> f;  // n
  std::function<Matrix(const Vector&)> g;  // n x q
};

struct SafetyFunction {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  int relative_degree = 1;
};

// Exponential barrier  B(zeta) = exp(h(zeta) / (|zeta + d| + r) - delta) - 1,
// built from a high-relative-degree constraint h >= 0; B has relative degree
// one wherever the drift moves the shifted state.
struct NcbfParams {
  double delta = 0.0;  // safe-set margin in the exponent
  double r = 0.0;      // denominator offset, > 0
  Vector d;            // state shift, |zeta + d| bounded away from 0
  double K = 0.0;      // class-K gain on the barrier value
};

// Quadratic Lyapunov function  V = (zeta - zeta_d)' Z (zeta - zeta_d).
struct ClfParams {
  Matrix Z;
  Vector zeta_d;
  double chi3 = 0.0;  // decay rate
  double p = 1.0;     // relaxation weight in the QP objective
  double chi1 = 0.0;  // lower quadratic bound, <= lambda_min(Z)
  double chi2 = 0.0;  // upper quadratic bound, >= lambda_max(Z)

  void validate() const;
};

struct ControlBounds {
  Vector v_min, v_max;  // componentwise, v_min <= v_max
};

// One inequality  a' [u; relax] <= b  of the per-step QP.
struct ConstraintRow {
  Vector a;  // q + 1 coefficients, last one on the relaxation variable
  double b = 0.0;
  std::string label;
};

double ncbf_value(double theta_val, const Vector& zeta, const NcbfParams& prm);

Vector ncbf_gradient(const AffineSystem& sys, const SafetyFunction& sf, const Vector& zeta,
                     const NcbfParams& prm);

// -L_g B u <= L_f B + K B   (barrier decay condition as a row on [u; relax])
ConstraintRow ncbf_constraint_row(const AffineSystem& sys, const SafetyFunction& sf,
                                  const Vector& zeta, const NcbfParams& prm);

double clf_value(const ClfParams& clf, const Vector& zeta);
Vector clf_gradient(const ClfParams& clf, const Vector& zeta);

// L_g V u - relax <= -L_f V - chi3 V   (relaxed exponential decay)
ConstraintRow clf_constraint_row(const AffineSystem& sys, const ClfParams& clf,
                                 const Vector& zeta);

// Relative-degree-1 constraint h >= 0 with linear class-K:  -L_g h u <= L_f h + gain h.
ConstraintRow rd1_cbf_row(const SafetyFunction& sf, const AffineSystem& sys,
                          const Vector& zeta, double alpha_gain);

// Second-order chain psi0 = h, psi1 = psi0_dot + k1 psi0, enforcing
// psi1_dot + k2 psi1 >= 0. The gradient of the drift Lie derivative is taken
// by central differences with a fixed step, so the row is deterministic.
ConstraintRow hocbf_constraint_row(const AffineSystem& sys, const SafetyFunction& sf,
                                   const Vector& zeta, std::pair<double, double> gains);

std::vector<ConstraintRow> input_bound_rows(const ControlBounds& bounds, std::size_t q);

}  // namespace ncbf::cbf
