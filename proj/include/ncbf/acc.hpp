#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ncbf/cbf.hpp"
#include "ncbf/feasibility.hpp"
#include "ncbf/qp.hpp"

namespace ncbf::acc {

enum class BarrierKind { Ncbf, Hocbf };
enum class Integrator { Euler, Rk4 };

std::string to_string(BarrierKind k);
std::string to_string(Integrator k);

// Adaptive cruise control along a straight road: state (v, z) = own speed and
// gap to the lead vehicle, input u = wheel force. All defaults are the
// case-study values used throughout the tests.
struct AccParams {
  double mass = 1650.0;
  double f0 = 0.1, f1 = 5.0, f2 = 0.25;  // rolling/drag resistance
  double v_front = 13.89;
  double v_max = 55.0, v_min = 0.0;
  double v_target = 24.0;
  double accel_frac = 0.4, decel_frac = 0.4;  // of gravity
  double gravity = 9.81;
  double gap_min = 10.0;
  double dt = 0.1, horizon = 50.0;
  double chi3 = 10.0;
  double relax_weight = 1.0;
  cbf::NcbfParams ncbf{0.09, 0.01, {0.1, 0.1}, 0.2};
  std::pair<double, double> hocbf_gains{0.15, 0.01};
  Integrator integrator = Integrator::Euler;
  bool scale_qp = false;  // solve in u/(mass*gravity) units, outputs unscaled

  double u_max() const { return accel_frac * mass * gravity; }
  double u_min() const { return -decel_frac * mass * gravity; }

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct AccState {
  double v = 0.0;
  double z = 0.0;
};

struct TrajectoryRecord {
  double t = 0.0;
  AccState state;
  double u = 0.0;
  double delta = 0.0;
  double theta = 0.0;      // gap constraint z - gap_min
  double big_theta = 0.0;  // exponential barrier value
  double v_lyap = 0.0;     // (v - v_target)^2
  qp::SolveStatus qp_status = qp::SolveStatus::Optimal;
  int qp_iters = 0;
  double feasibility_margin = 0.0;
};

double resistance(double v, const AccParams& prm);

// (dv, dz) under wheel force u
std::pair<double, double> dynamics(const AccState& s, double u, const AccParams& prm);

cbf::AffineSystem make_system(const AccParams& prm);
cbf::SafetyFunction gap_safety(const AccParams& prm);    // z - gap_min, relative degree 2
cbf::SafetyFunction speed_upper(const AccParams& prm);   // v_max - v
cbf::SafetyFunction speed_lower(const AccParams& prm);   // v - v_min
cbf::ControlBounds force_bounds(const AccParams& prm);

// Speed-only subsystem carrying the quadratic tracking objective.
cbf::AffineSystem make_speed_subsystem(const AccParams& prm);
cbf::ClfParams speed_clf(const AccParams& prm);

// Decision vector [u; relax]; six rows: force bounds, speed limits as
// relative-degree-1 barrier rows, the gap barrier row, the relaxed CLF row.
qp::QpProblem assemble_qp(const AccState& s, const AccParams& prm, BarrierKind barrier);

AccState step(const AccState& s, double u, const AccParams& prm);

// Barrier value and feasibility margin at a state (margin only valid inside
// the safe set; callers guard on big_theta > 0).
double barrier_value(const AccState& s, const AccParams& prm);
feasibility::FeasibilityReport feasibility_at(const AccState& s, const AccParams& prm);

// Closed loop under the per-step QP. On a failed solve the previous control
// is held and the record keeps the failed status, so partial trajectories
// stay available for diagnostics.
std::vector<TrajectoryRecord> simulate(const AccState& s0, const AccParams& prm,
                                       BarrierKind barrier,
                                       const qp::SolverConfig& solver = {});

std::string trajectory_csv(const std::vector<TrajectoryRecord>& traj);
std::vector<TrajectoryRecord> parse_trajectory_csv(std::istream& in);

extern const char* const kTrajectoryCsvHeader;

}  // namespace ncbf::acc
