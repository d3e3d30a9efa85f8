#include "ncbf/acc.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>

namespace ncbf::acc {

std::string to_string(BarrierKind k) { return k == BarrierKind::Ncbf ? "ncbf" : "hocbf"; }
std::string to_string(Integrator k) { return k == Integrator::Euler ? "euler" : "rk4"; }

void AccParams::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x))
      throw ConfigError(std::string(name) + " must be positive and finite");
  };
  positive(mass, "mass");
  positive(gravity, "gravity");
  positive(gap_min, "gap_min");
  positive(accel_frac, "accel_frac");
  positive(decel_frac, "decel_frac");
  positive(chi3, "chi3");
  positive(relax_weight, "relax_weight");
  positive(dt, "dt");
  positive(horizon, "horizon");
  positive(v_front, "v_front");
  positive(ncbf.delta, "ncbf.delta");
  positive(ncbf.r, "ncbf.r");
  positive(ncbf.K, "ncbf.K");
  positive(hocbf_gains.first, "hocbf_gains[0]");
  positive(hocbf_gains.second, "hocbf_gains[1]");
  if (f0 < 0.0 || f1 < 0.0 || f2 < 0.0)
    throw ConfigError("f0, f1, f2 must be nonnegative");
  if (dt > 1.0) throw ConfigError("dt must lie in (0, 1]");
  if (horizon / dt > 1e6) throw ConfigError("horizon/dt exceeds 1e6 steps");
  if (v_min < 0.0) throw ConfigError("v_min must be nonnegative");
  if (v_max <= v_min) throw ConfigError("v_max must exceed v_min");
  if (v_front < v_min || v_front > v_max) throw ConfigError("v_front must lie in [v_min, v_max]");
  if (v_target < v_min || v_target > v_max) throw ConfigError("v_target must lie in [v_min, v_max]");
  if (ncbf.d.size() != 2) throw ConfigError("ncbf.d must have two components");
  for (double x : ncbf.d)
    if (!std::isfinite(x)) throw ConfigError("ncbf.d must be finite");
}

double resistance(double v, const AccParams& prm) {
  const double sgn = (v > 0.0) - (v < 0.0);
  return prm.f0 * sgn + prm.f1 * v + prm.f2 * v * v;
}

std::pair<double, double> dynamics(const AccState& s, double u, const AccParams& prm) {
  return {(u - resistance(s.v, prm)) / prm.mass, prm.v_front - s.v};
}

cbf::AffineSystem make_system(const AccParams& prm) {
  cbf::AffineSystem sys;
  sys.n = 2;
  sys.q = 1;
  sys.f = [prm](const linalg::Vector& zeta) {
    return linalg::Vector{-resistance(zeta[0], prm) / prm.mass, prm.v_front - zeta[0]};
  };
  sys.g = [prm](const linalg::Vector&) {
    linalg::Matrix g(2, 1);
    g(0, 0) = 1.0 / prm.mass;
    return g;
  };
  return sys;
}

cbf::SafetyFunction gap_safety(const AccParams& prm) {
  cbf::SafetyFunction sf;
  sf.value = [prm](const linalg::Vector& zeta) { return zeta[1] - prm.gap_min; };
  sf.gradient = [](const linalg::Vector&) { return linalg::Vector{0.0, 1.0}; };
  sf.relative_degree = 2;
  return sf;
}

cbf::SafetyFunction speed_upper(const AccParams& prm) {
  cbf::SafetyFunction sf;
  sf.value = [prm](const linalg::Vector& zeta) { return prm.v_max - zeta[0]; };
  sf.gradient = [](const linalg::Vector&) { return linalg::Vector{-1.0, 0.0}; };
  sf.relative_degree = 1;
  return sf;
}

cbf::SafetyFunction speed_lower(const AccParams& prm) {
  cbf::SafetyFunction sf;
  sf.value = [prm](const linalg::Vector& zeta) { return zeta[0] - prm.v_min; };
  sf.gradient = [](const linalg::Vector&) { return linalg::Vector{1.0, 0.0}; };
  sf.relative_degree = 1;
  return sf;
}

cbf::ControlBounds force_bounds(const AccParams& prm) {
  return {{prm.u_min()}, {prm.u_max()}};
}

cbf::AffineSystem make_speed_subsystem(const AccParams& prm) {
  cbf::AffineSystem sys;
  sys.n = 1;
  sys.q = 1;
  sys.f = [prm](const linalg::Vector& zeta) {
    return linalg::Vector{-resistance(zeta[0], prm) / prm.mass};
  };
  sys.g = [prm](const linalg::Vector&) {
    linalg::Matrix g(1, 1);
    g(0, 0) = 1.0 / prm.mass;
    return g;
  };
  return sys;
}

cbf::ClfParams speed_clf(const AccParams& prm) {
  cbf::ClfParams clf;
  clf.Z = linalg::Matrix::identity(1);
  clf.zeta_d = {prm.v_target};
  clf.chi3 = prm.chi3;
  clf.p = prm.relax_weight;
  clf.chi1 = 1.0;
  clf.chi2 = 1.0;
  return clf;
}

qp::QpProblem assemble_qp(const AccState& s, const AccParams& prm, BarrierKind barrier) {
  const linalg::Vector zeta{s.v, s.z};
  const auto sys = make_system(prm);

  std::vector<cbf::ConstraintRow> rows = cbf::input_bound_rows(force_bounds(prm), 1);
  rows.push_back(cbf::rd1_cbf_row(speed_upper(prm), sys, zeta, 1.0));
  rows.push_back(cbf::rd1_cbf_row(speed_lower(prm), sys, zeta, 1.0));
  if (barrier == BarrierKind::Ncbf)
    rows.push_back(cbf::ncbf_constraint_row(sys, gap_safety(prm), zeta, prm.ncbf));
  else
    rows.push_back(cbf::hocbf_constraint_row(sys, gap_safety(prm), zeta, prm.hocbf_gains));
  rows.push_back(cbf::clf_constraint_row(make_speed_subsystem(prm), speed_clf(prm), {s.v}));

  const double fr = resistance(s.v, prm);
  qp::QpProblem p;
  p.P = linalg::Matrix(2, 2);
  p.P(0, 0) = 2.0 / (prm.mass * prm.mass);
  p.P(1, 1) = 2.0 * prm.relax_weight;
  p.G = {-2.0 * fr / (prm.mass * prm.mass), 0.0};
  p.A = linalg::Matrix(rows.size(), 2);
  p.theta.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    p.A(i, 0) = rows[i].a[0];
    p.A(i, 1) = rows[i].a[1];
    p.theta[i] = rows[i].b;
  }

  if (prm.scale_qp) {
    const double c = prm.mass * prm.gravity;
    p.P(0, 0) *= c * c;
    p.G[0] *= c;
    for (std::size_t i = 0; i < rows.size(); ++i) p.A(i, 0) *= c;
  }
  return p;
}

AccState step(const AccState& s, double u, const AccParams& prm) {
  if (prm.integrator == Integrator::Euler) {
    const auto [dv, dz] = dynamics(s, u, prm);
    return {s.v + prm.dt * dv, s.z + prm.dt * dz};
  }
  auto deriv = [&](const AccState& x) { return dynamics(x, u, prm); };
  const auto k1 = deriv(s);
  const auto k2 = deriv({s.v + 0.5 * prm.dt * k1.first, s.z + 0.5 * prm.dt * k1.second});
  const auto k3 = deriv({s.v + 0.5 * prm.dt * k2.first, s.z + 0.5 * prm.dt * k2.second});
  const auto k4 = deriv({s.v + prm.dt * k3.first, s.z + prm.dt * k3.second});
  return {s.v + prm.dt / 6.0 * (k1.first + 2.0 * k2.first + 2.0 * k3.first + k4.first),
          s.z + prm.dt / 6.0 * (k1.second + 2.0 * k2.second + 2.0 * k3.second + k4.second)};
}

double barrier_value(const AccState& s, const AccParams& prm) {
  return cbf::ncbf_value(s.z - prm.gap_min, {s.v, s.z}, prm.ncbf);
}

feasibility::FeasibilityReport feasibility_at(const AccState& s, const AccParams& prm) {
  const auto bounds = feasibility::symmetrize_bounds(force_bounds(prm));
  return feasibility::theorem_condition(make_system(prm), gap_safety(prm), {s.v, s.z},
                                        prm.ncbf, bounds);
}

std::vector<TrajectoryRecord> simulate(const AccState& s0, const AccParams& prm,
                                       BarrierKind barrier, const qp::SolverConfig& solver) {
  prm.validate();
  const long steps = std::lround(prm.horizon / prm.dt);
  const double control_scale = prm.scale_qp ? prm.mass * prm.gravity : 1.0;

  std::vector<TrajectoryRecord> traj;
  traj.reserve(static_cast<std::size_t>(steps) + 1);

  AccState s = s0;
  double held_u = 0.0;
  for (long k = 0; k <= steps; ++k) {
    TrajectoryRecord rec;
    rec.t = static_cast<double>(k) * prm.dt;
    rec.state = s;
    rec.theta = s.z - prm.gap_min;
    rec.big_theta = barrier_value(s, prm);
    rec.v_lyap = (s.v - prm.v_target) * (s.v - prm.v_target);

    const auto sol = qp::solve(assemble_qp(s, prm, barrier), solver);
    rec.qp_status = sol.status;
    rec.qp_iters = sol.iterations;
    if (sol.status == qp::SolveStatus::Optimal) {
      rec.u = sol.v_star[0] * control_scale;
      rec.delta = sol.v_star[1];
      held_u = rec.u;
    } else {
      rec.u = held_u;
      rec.delta = 0.0;
    }

    if (barrier == BarrierKind::Ncbf && rec.theta > 0.0 && rec.big_theta > 0.0)
      rec.feasibility_margin = feasibility_at(s, prm).margin;

    traj.push_back(rec);
    if (k < steps) s = step(s, rec.u, prm);
  }
  return traj;
}

const char* const kTrajectoryCsvHeader = "t,v,z,u,delta,theta,Theta,V,qp_status,qp_iters,feas_margin";

namespace {

void append_double(std::string& out, double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, res.ptr);
}

double parse_double(std::string_view field, const char* what) {
  double x = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    throw ConfigError(std::string("trajectory csv: bad ") + what + " field");
  return x;
}

qp::SolveStatus parse_status(std::string_view field) {
  if (field == "Optimal") return qp::SolveStatus::Optimal;
  if (field == "MaxIterations") return qp::SolveStatus::MaxIterations;
  if (field == "NumericalFailure") return qp::SolveStatus::NumericalFailure;
  throw ConfigError("trajectory csv: unknown qp_status");
}

}  // namespace

std::string trajectory_csv(const std::vector<TrajectoryRecord>& traj) {
  std::string out = kTrajectoryCsvHeader;
  out += '\n';
  for (const auto& rec : traj) {
    append_double(out, rec.t);
    out += ',';
    append_double(out, rec.state.v);
    out += ',';
    append_double(out, rec.state.z);
    out += ',';
    append_double(out, rec.u);
    out += ',';
    append_double(out, rec.delta);
    out += ',';
    append_double(out, rec.theta);
    out += ',';
    append_double(out, rec.big_theta);
    out += ',';
    append_double(out, rec.v_lyap);
    out += ',';
    out += qp::to_string(rec.qp_status);
    out += ',';
    out += std::to_string(rec.qp_iters);
    out += ',';
    append_double(out, rec.feasibility_margin);
    out += '\n';
  }
  return out;
}

std::vector<TrajectoryRecord> parse_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trajectory csv: empty input");
  if (line == std::string(kTrajectoryCsvHeader) + "\r") line.pop_back();
  if (line != kTrajectoryCsvHeader)
    throw ConfigError("trajectory csv: unexpected header");

  std::vector<TrajectoryRecord> traj;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view view = line;
    while (true) {
      const auto pos = view.find(',');
      fields.push_back(view.substr(0, pos));
      if (pos == std::string_view::npos) break;
      view.remove_prefix(pos + 1);
    }
    if (fields.size() != 11) throw ConfigError("trajectory csv: expected 11 fields per row");

    TrajectoryRecord rec;
    rec.t = parse_double(fields[0], "t");
    rec.state.v = parse_double(fields[1], "v");
    rec.state.z = parse_double(fields[2], "z");
    rec.u = parse_double(fields[3], "u");
    rec.delta = parse_double(fields[4], "delta");
    rec.theta = parse_double(fields[5], "theta");
    rec.big_theta = parse_double(fields[6], "Theta");
    rec.v_lyap = parse_double(fields[7], "V");
    rec.qp_status = parse_status(fields[8]);
    rec.qp_iters = static_cast<int>(parse_double(fields[9], "qp_iters"));
    rec.feasibility_margin = parse_double(fields[10], "feas_margin");
    traj.push_back(rec);
  }
  return traj;
}

}  // namespace ncbf::acc
