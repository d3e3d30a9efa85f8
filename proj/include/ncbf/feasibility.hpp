#pragma once

#include <optional>
#include <span>

#include "ncbf/cbf.hpp"

namespace ncbf::feasibility {

using cbf::AffineSystem;
using cbf::ControlBounds;
using cbf::NcbfParams;
using cbf::SafetyFunction;
using linalg::Vector;

// Pointwise check of the closed-form compatibility condition between the
// barrier decay row and the control bounds: worst-case drift plus the
// bound-saturated control term must not exceed K * B. Uses |gd| componentwise,
// so it is sign-robust once the bounds are symmetric.
struct FeasibilityReport {
  Vector gd;           // (zeta + d)' g(zeta), one entry per input
  double lhs = 0.0;    // worst-case left-hand side
  double alpha_theta = 0.0;  // K * B
  bool satisfied = false;
  double y_value = 0.0;  // equilibrium diagnostic; <= 0 near the safe equilibrium
  double margin = 0.0;   // alpha_theta - lhs
};

struct TrackingBoundReport {
  double empirical_m = 0.0;  // max over samples of Vdot + chi3 V
  double chi3 = 0.0;
  double v0 = 0.0;
  double epsilon = 0.0;  // ultimate tracking radius from the comparison lemma
  std::optional<double> violated_at;
};

struct TimedValue {
  double t = 0.0;
  double value = 0.0;
};

Vector gd(const AffineSystem& sys, const Vector& zeta, const Vector& d);

FeasibilityReport theorem_condition(const AffineSystem& sys, const SafetyFunction& sf,
                                    const Vector& zeta, const NcbfParams& prm,
                                    const ControlBounds& bounds);

double y_function(const AffineSystem& sys, const SafetyFunction& sf, const Vector& zeta,
                  const NcbfParams& prm, const ControlBounds& bounds);

// Componentwise v_lim = min(|v_min|, v_max), returned as (-v_lim, v_lim).
// Requires v_min <= 0 <= v_max.
ControlBounds symmetrize_bounds(const ControlBounds& bounds);

// A-posteriori certificate for the relaxed-CLF decay: estimates
// m = max(Vdot + chi3 V) with forward differences and verifies
// V(t) <= m/chi3 + (V(t0) - m/chi3) exp(-chi3 (t - t0)) within
// 1e-6 + 1e-3 V(t0) at every sample.
TrackingBoundReport tracking_bound_check(std::span<const TimedValue> traj, double chi3,
                                         double lambda_min);

}  // namespace ncbf::feasibility
