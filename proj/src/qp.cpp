#include "ncbf/qp.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace ncbf::qp {

using linalg::dot;
using linalg::matvec;
using linalg::matvec_transpose;
using linalg::norm_inf;

void QpProblem::validate() const {
  const std::size_t n = num_vars();
  const std::size_t m = num_constraints();
  if (P.rows() != n || P.cols() != n)
    throw PreconditionViolated("QpProblem: P must be n x n with n = |G|");
  if (A.rows() != m || (m > 0 && A.cols() != n))
    throw PreconditionViolated("QpProblem: A must be m x n with m = |theta|");
  for (double x : P.data())
    if (!std::isfinite(x)) throw PreconditionViolated("QpProblem: non-finite entry in P");
  for (double x : A.data())
    if (!std::isfinite(x)) throw PreconditionViolated("QpProblem: non-finite entry in A");
  for (double x : G)
    if (!std::isfinite(x)) throw PreconditionViolated("QpProblem: non-finite entry in G");
  for (double x : theta)
    if (!std::isfinite(x)) throw PreconditionViolated("QpProblem: non-finite entry in theta");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(P(i, j) - P(j, i)) > 1e-12)
        throw PreconditionViolated("QpProblem: P asymmetric beyond 1e-12");
  if (!linalg::is_positive_definite(P))
    throw PreconditionViolated("QpProblem: P is not positive definite");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "NumericalFailure";
}

Vector kkt_residual(const QpProblem& p, const IpmIterate& it, double sigma_mu) {
  const std::size_t n = p.num_vars();
  const std::size_t m = p.num_constraints();
  Vector r(n + 2 * m);

  Vector r1 = matvec(p.P, it.v);
  Vector atl = matvec_transpose(p.A, it.lambda);
  for (std::size_t i = 0; i < n; ++i) r[i] = r1[i] + p.G[i] + atl[i];

  Vector av = matvec(p.A, it.v);
  for (std::size_t i = 0; i < m; ++i) r[n + i] = av[i] + it.s[i] - p.theta[i];

  for (std::size_t i = 0; i < m; ++i) r[n + m + i] = it.s[i] * it.lambda[i] - sigma_mu;
  return r;
}

NewtonDirection newton_direction(const QpProblem& p, const IpmIterate& it, double sigma,
                                 double mu, const std::optional<CorrectorTerm>& corrector,
                                 double diag_reg) {
  const std::size_t n = p.num_vars();
  const std::size_t m = p.num_constraints();
  const std::size_t dim = n + 2 * m;

  Matrix K(dim, dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) K(i, j) = p.P(i, j);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      K(i + n, j) = p.A(i, j);       // primal block
      K(j, i + n + m) = p.A(i, j);   // A' in the stationarity block
    }
  for (std::size_t i = 0; i < m; ++i) {
    K(n + i, n + i) = 1.0;
    K(n + m + i, n + i) = it.lambda[i];
    K(n + m + i, n + m + i) = it.s[i];
  }
  if (diag_reg != 0.0)
    for (std::size_t i = 0; i < dim; ++i) K(i, i) += diag_reg;

  Vector rhs = kkt_residual(p, it, sigma * mu);
  if (corrector) {
    for (std::size_t i = 0; i < m; ++i)
      rhs[n + m + i] += corrector->ds_aff[i] * corrector->dlambda_aff[i];
  }
  for (double& x : rhs) x = -x;

  // Row equilibration (exact power-of-two scaling) so late-stage iterates with
  // huge slacks don't trip the proportional pivot threshold.
  for (std::size_t i = 0; i < dim; ++i) {
    double rowmax = 0.0;
    for (std::size_t j = 0; j < dim; ++j) rowmax = std::max(rowmax, std::abs(K(i, j)));
    if (rowmax <= 0.0 || !std::isfinite(rowmax)) continue;
    const int e = std::ilogb(rowmax);
    if (e == 0) continue;
    for (std::size_t j = 0; j < dim; ++j) K(i, j) = std::ldexp(K(i, j), -e);
    rhs[i] = std::ldexp(rhs[i], -e);
  }

  Vector d;
  try {
    d = linalg::lu_solve(K, rhs);
  } catch (const SingularMatrix& e) {
    throw SingularKkt(e.what());
  }

  NewtonDirection dir;
  dir.dv.assign(d.begin(), d.begin() + n);
  dir.ds.assign(d.begin() + n, d.begin() + n + m);
  dir.dlambda.assign(d.begin() + n + m, d.end());
  return dir;
}

std::pair<double, double> step_to_boundary(const Vector& s, const Vector& lambda,
                                           const Vector& ds, const Vector& dlambda,
                                           double tau) {
  double bp = 1.0, bd = 1.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (ds[i] < 0.0) bp = std::min(bp, -tau * s[i] / ds[i]);
  for (std::size_t i = 0; i < lambda.size(); ++i)
    if (dlambda[i] < 0.0) bd = std::min(bd, -tau * lambda[i] / dlambda[i]);
  return {bp, bd};
}

namespace {

// Retries once with diagonal regularization before giving up.
bool solve_direction(const QpProblem& p, const IpmIterate& it, double sigma, double mu,
                     const std::optional<CorrectorTerm>& corrector, NewtonDirection& dir) {
  try {
    dir = newton_direction(p, it, sigma, mu, corrector);
    return true;
  } catch (const SingularKkt&) {
  }
  try {
    dir = newton_direction(p, it, sigma, mu, corrector, 1e-10);
    return true;
  } catch (const SingularKkt&) {
    return false;
  }
}

}  // namespace

QpSolution solve(const QpProblem& p, const SolverConfig& cfg) {
  p.validate();
  const std::size_t n = p.num_vars();
  const std::size_t m = p.num_constraints();

  QpSolution sol;
  if (m == 0) {
    Vector negg = p.G;
    for (double& x : negg) x = -x;
    sol.v_star = linalg::lu_solve(p.P, negg);
    sol.status = SolveStatus::Optimal;
    IpmIterate it{sol.v_star, {}, {}, 0.0, 0.0};
    sol.kkt_residual_norm = norm_inf(kkt_residual(p, it, 0.0));
    return sol;
  }

  IpmIterate it;
  it.v.assign(n, 0.0);
  it.s.resize(m);
  it.lambda.assign(m, cfg.init_margin);
  for (std::size_t i = 0; i < m; ++i) it.s[i] = std::max(cfg.init_margin, p.theta[i]);

  auto finish = [&](SolveStatus status, int iters) {
    sol.v_star = it.v;
    sol.lambda_star = it.lambda;
    sol.s_star = it.s;
    sol.iterations = iters;
    sol.status = status;
    sol.final_mu = it.mu;
    sol.kkt_residual_norm = norm_inf(kkt_residual(p, it, 0.0));
    return sol;
  };

  for (int k = 0; k < cfg.max_iter; ++k) {
    it.mu = dot(it.s, it.lambda) / static_cast<double>(m);
    if (it.mu < cfg.tol_mu && norm_inf(kkt_residual(p, it, 0.0)) < cfg.tol_residual)
      return finish(SolveStatus::Optimal, k);

    NewtonDirection aff;
    if (!solve_direction(p, it, 0.0, it.mu, std::nullopt, aff))
      return finish(SolveStatus::NumericalFailure, k);

    auto [bp_aff, bd_aff] = step_to_boundary(it.s, it.lambda, aff.ds, aff.dlambda, 1.0);
    const double beta_aff = std::min(bp_aff, bd_aff);
    double mu_aff = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      mu_aff += (it.s[i] + beta_aff * aff.ds[i]) * (it.lambda[i] + beta_aff * aff.dlambda[i]);
    mu_aff /= static_cast<double>(m);

    const double ratio = mu_aff / it.mu;
    it.sigma = ratio * ratio * ratio;

    NewtonDirection dir;
    CorrectorTerm corr{aff.ds, aff.dlambda};
    if (!solve_direction(p, it, it.sigma, it.mu, corr, dir))
      return finish(SolveStatus::NumericalFailure, k);

    auto [bp, bd] = step_to_boundary(it.s, it.lambda, dir.ds, dir.dlambda, cfg.tau);
    const double beta = std::min(bp, bd);
    if (beta < 1e-12) return finish(SolveStatus::NumericalFailure, k);

    for (std::size_t i = 0; i < n; ++i) it.v[i] += beta * dir.dv[i];
    for (std::size_t i = 0; i < m; ++i) {
      it.s[i] += beta * dir.ds[i];
      it.lambda[i] += beta * dir.dlambda[i];
    }
  }

  it.mu = dot(it.s, it.lambda) / static_cast<double>(m);
  if (it.mu < cfg.tol_mu && norm_inf(kkt_residual(p, it, 0.0)) < cfg.tol_residual)
    return finish(SolveStatus::Optimal, cfg.max_iter);
  return finish(SolveStatus::MaxIterations, cfg.max_iter);
}

QpProblem problem_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("qp json: ") + e.what());
  }
  for (const char* key : {"P", "G", "A", "theta"})
    if (!j.contains(key)) throw ConfigError(std::string("qp json: missing key \"") + key + "\"");

  auto read_matrix = [](const nlohmann::json& jm, const char* key) {
    if (!jm.is_array()) throw ConfigError(std::string("qp json: \"") + key + "\" must be an array of rows");
    const std::size_t rows = jm.size();
    std::size_t cols = rows > 0 ? jm.at(0).size() : 0;
    Matrix M(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      const auto& row = jm.at(i);
      if (!row.is_array() || row.size() != cols)
        throw ConfigError(std::string("qp json: ragged rows in \"") + key + "\"");
      for (std::size_t c = 0; c < cols; ++c) {
        if (!row.at(c).is_number())
          throw ConfigError(std::string("qp json: non-numeric entry in \"") + key + "\"");
        M(i, c) = row.at(c).get<double>();
      }
    }
    return M;
  };
  auto read_vector = [](const nlohmann::json& jv, const char* key) {
    if (!jv.is_array()) throw ConfigError(std::string("qp json: \"") + key + "\" must be an array");
    Vector v(jv.size());
    for (std::size_t i = 0; i < jv.size(); ++i) {
      if (!jv.at(i).is_number())
        throw ConfigError(std::string("qp json: non-numeric entry in \"") + key + "\"");
      v[i] = jv.at(i).get<double>();
    }
    return v;
  };

  QpProblem p;
  p.P = read_matrix(j.at("P"), "P");
  p.A = read_matrix(j.at("A"), "A");
  p.G = read_vector(j.at("G"), "G");
  p.theta = read_vector(j.at("theta"), "theta");
  if (p.A.rows() == 0) p.A = Matrix(0, p.num_vars());
  try {
    p.validate();
  } catch (const PreconditionViolated& e) {
    throw ConfigError(std::string("qp json: ") + e.what());
  }
  return p;
}

std::string problem_to_json_text(const QpProblem& p, int indent) {
  nlohmann::json j;
  auto matrix_rows = [](const Matrix& M) {
    std::vector<std::vector<double>> rows(M.rows(), std::vector<double>(M.cols()));
    for (std::size_t i = 0; i < M.rows(); ++i)
      for (std::size_t c = 0; c < M.cols(); ++c) rows[i][c] = M(i, c);
    return rows;
  };
  j["P"] = matrix_rows(p.P);
  j["G"] = p.G;
  j["A"] = matrix_rows(p.A);
  j["theta"] = p.theta;
  return j.dump(indent);
}

}  // namespace ncbf::qp
