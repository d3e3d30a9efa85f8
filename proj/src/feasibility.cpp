#include "ncbf/feasibility.hpp"

#include <algorithm>
#include <cmath>

namespace ncbf::feasibility {

using linalg::dot;
using linalg::matvec_transpose;
using linalg::norm2;

Vector gd(const AffineSystem& sys, const Vector& zeta, const Vector& d) {
  Vector sh(zeta.size());
  for (std::size_t i = 0; i < zeta.size(); ++i) sh[i] = zeta[i] + d[i];
  return matvec_transpose(sys.g(zeta), sh);
}

namespace {

struct Pieces {
  double theta = 0.0;
  double nrm = 0.0;
  double w = 0.0;
  double big_theta = 0.0;
  double lf_theta = 0.0;
  double bracket = 0.0;  // |gd|' v_min + (zeta+d)' f
};

Pieces assemble(const AffineSystem& sys, const SafetyFunction& sf, const Vector& zeta,
                const NcbfParams& prm, const ControlBounds& bounds) {
  Pieces ps;
  ps.theta = sf.value(zeta);
  Vector sh(zeta.size());
  for (std::size_t i = 0; i < zeta.size(); ++i) sh[i] = zeta[i] + prm.d[i];
  ps.nrm = norm2(sh);
  if (ps.nrm < 1e-12) throw DegenerateState("theorem_condition: |zeta + d| below 1e-12");
  ps.w = ps.nrm + prm.r;
  ps.big_theta = std::exp(ps.theta / ps.w - prm.delta) - 1.0;
  if (!(ps.theta > 0.0) || !(ps.big_theta > 0.0))
    throw PreconditionViolated("theorem_condition: requires theta > 0 and barrier value > 0");

  const Vector fz = sys.f(zeta);
  const Vector gdv = matvec_transpose(sys.g(zeta), sh);
  ps.lf_theta = dot(sf.gradient(zeta), fz);

  double worst = 0.0;
  for (std::size_t j = 0; j < gdv.size(); ++j) worst += std::abs(gdv[j]) * bounds.v_min[j];
  ps.bracket = worst + dot(sh, fz);
  return ps;
}

}  // namespace

FeasibilityReport theorem_condition(const AffineSystem& sys, const SafetyFunction& sf,
                                    const Vector& zeta, const NcbfParams& prm,
                                    const ControlBounds& bounds) {
  const Pieces ps = assemble(sys, sf, zeta, prm, bounds);

  FeasibilityReport rep;
  rep.gd = gd(sys, zeta, prm.d);
  rep.lhs = (ps.big_theta + 1.0) * ps.theta / (ps.w * ps.w * ps.nrm) *
            (ps.bracket - ps.w * ps.nrm * ps.lf_theta / ps.theta);
  rep.alpha_theta = prm.K * ps.big_theta;
  rep.margin = rep.alpha_theta - rep.lhs;
  rep.satisfied = rep.lhs <= rep.alpha_theta;
  rep.y_value = (ps.bracket * ps.theta - ps.w * ps.nrm * ps.lf_theta) /
                (ps.big_theta * ps.w * ps.w * ps.nrm);
  return rep;
}

double y_function(const AffineSystem& sys, const SafetyFunction& sf, const Vector& zeta,
                  const NcbfParams& prm, const ControlBounds& bounds) {
  const Pieces ps = assemble(sys, sf, zeta, prm, bounds);
  return (ps.bracket * ps.theta - ps.w * ps.nrm * ps.lf_theta) /
         (ps.big_theta * ps.w * ps.w * ps.nrm);
}

ControlBounds symmetrize_bounds(const ControlBounds& bounds) {
  if (bounds.v_min.size() != bounds.v_max.size())
    throw PreconditionViolated("symmetrize_bounds: dimension mismatch");
  ControlBounds out;
  out.v_min.resize(bounds.v_min.size());
  out.v_max.resize(bounds.v_max.size());
  for (std::size_t j = 0; j < bounds.v_min.size(); ++j) {
    if (bounds.v_min[j] > 0.0 || bounds.v_max[j] < 0.0)
      throw PreconditionViolated("symmetrize_bounds: bounds must straddle zero");
    const double lim = std::min(std::abs(bounds.v_min[j]), bounds.v_max[j]);
    out.v_min[j] = -lim;
    out.v_max[j] = lim;
  }
  return out;
}

TrackingBoundReport tracking_bound_check(std::span<const TimedValue> traj, double chi3,
                                         double lambda_min) {
  if (traj.empty()) throw PreconditionViolated("tracking_bound_check: empty trajectory");
  if (chi3 <= 0.0 || lambda_min <= 0.0)
    throw PreconditionViolated("tracking_bound_check: chi3 and lambda_min must be positive");

  TrackingBoundReport rep;
  rep.chi3 = chi3;
  rep.v0 = traj.front().value;

  double m = 0.0;
  bool have_m = false;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double dt = traj[k + 1].t - traj[k].t;
    if (!(dt > 0.0)) throw PreconditionViolated("tracking_bound_check: time must increase");
    const double vdot = (traj[k + 1].value - traj[k].value) / dt;
    const double cand = vdot + chi3 * traj[k].value;
    if (!have_m || cand > m) {
      m = cand;
      have_m = true;
    }
  }
  rep.empirical_m = have_m ? m : 0.0;

  const double m_pos = std::max(rep.empirical_m, 0.0);
  rep.epsilon = std::max(std::sqrt(m_pos / (lambda_min * chi3)), std::sqrt(rep.v0 / lambda_min));

  const double tol = 1e-6 + 1e-3 * rep.v0;
  const double offset = rep.empirical_m / chi3;
  const double t0 = traj.front().t;
  for (const auto& sample : traj) {
    const double bound = offset + (rep.v0 - offset) * std::exp(-chi3 * (sample.t - t0));
    if (sample.value > bound + tol) {
      rep.violated_at = sample.t;
      break;
    }
  }
  return rep;
}

}  // namespace ncbf::feasibility
