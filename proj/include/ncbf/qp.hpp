#pragma once

#include <optional>
#include <string>
#include <utility>

#include "ncbf/linalg.hpp"

namespace ncbf::qp {

using linalg::Matrix;
using linalg::Vector;

// min 0.5 v' P v + G' v   s.t.  A v <= theta
struct QpProblem {
  Matrix P;      // n x n, symmetric positive definite
  Matrix A;      // m x n
  Vector G;      // n
  Vector theta;  // m

  std::size_t num_vars() const { return G.size(); }
  std::size_t num_constraints() const { return theta.size(); }

  // Throws PreconditionViolated on dimension mismatch, asymmetry beyond
  // 1e-12, non-finite entries, or P failing a Cholesky probe.
  void validate() const;
};

struct IpmIterate {
  Vector v;       // primal
  Vector s;       // slacks, > 0
  Vector lambda;  // multipliers, > 0
  double mu = 0.0;
  double sigma = 0.0;
};

struct SolverConfig {
  double tol_mu = 1e-9;
  double tol_residual = 1e-8;
  int max_iter = 100;
  double tau = 0.995;
  double init_margin = 1.0;
};

enum class SolveStatus { Optimal, MaxIterations, NumericalFailure };

std::string to_string(SolveStatus s);

struct QpSolution {
  Vector v_star;
  Vector lambda_star;
  Vector s_star;
  int iterations = 0;
  SolveStatus status = SolveStatus::NumericalFailure;
  double final_mu = 0.0;
  double kkt_residual_norm = 0.0;
};

// Stacked residual [P v + G + A' lambda; A v + s - theta; s_i lambda_i - sigma_mu].
Vector kkt_residual(const QpProblem& p, const IpmIterate& it, double sigma_mu);

struct NewtonDirection {
  Vector dv, ds, dlambda;
};

// Slack/multiplier products of the affine predictor, fed back into the
// centering-corrector right-hand side.
struct CorrectorTerm {
  Vector ds_aff, dlambda_aff;
};

// Solves the Newton system for the current iterate. Throws SingularKkt when
// the factorization hits the pivot threshold; diag_reg is added to the whole
// diagonal (the retry path after a singular KKT).
NewtonDirection newton_direction(const QpProblem& p, const IpmIterate& it, double sigma,
                                 double mu,
                                 const std::optional<CorrectorTerm>& corrector = std::nullopt,
                                 double diag_reg = 0.0);

// Fraction-to-boundary: largest beta in (0,1] with x + beta dx >= (1-tau) x,
// separately for slacks (first) and multipliers (second).
std::pair<double, double> step_to_boundary(const Vector& s, const Vector& lambda,
                                           const Vector& ds, const Vector& dlambda, double tau);

QpSolution solve(const QpProblem& p, const SolverConfig& cfg = {});

// Debug serialization, object keys "P", "G", "A", "theta".
QpProblem problem_from_json_text(const std::string& text);
std::string problem_to_json_text(const QpProblem& p, int indent = 2);

}  // namespace ncbf::qp
