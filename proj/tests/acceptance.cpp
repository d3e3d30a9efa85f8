// End-to-end acceptance gate: one pass/fail line per criterion, nonzero exit
// if any criterion fails. Oracles are independent of the library code paths.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ncbf/acc.hpp"
#include "ncbf/cbf.hpp"
#include "ncbf/feasibility.hpp"
#include "ncbf/qp.hpp"
#include "support/oracles.hpp"

using namespace ncbf;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Run {
  acc::BarrierKind kind = acc::BarrierKind::Ncbf;
  double v0 = 0.0;
  std::vector<acc::TrajectoryRecord> traj;
};

const std::vector<double> kSweep{0.0, 5.0, 10.0, 15.0, 20.0, 25.0};

std::string fmt(double x) {
  std::ostringstream out;
  out << std::setprecision(10) << x;
  return out.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Run> sweep_runs(const acc::AccParams& prm,
                            const std::vector<acc::BarrierKind>& kinds) {
  std::vector<std::future<Run>> futures;
  for (const auto kind : kinds)
    for (const double v0 : kSweep)
      futures.push_back(std::async(std::launch::async, [&prm, kind, v0] {
        return Run{kind, v0, acc::simulate({v0, 100.0}, prm, kind)};
      }));
  std::vector<Run> runs;
  runs.reserve(futures.size());
  for (auto& f : futures) runs.push_back(f.get());
  return runs;
}

// The relax column makes its row satisfiable for any u, so per-step
// feasibility reduces to a one-dimensional interval intersection.
bool step_feasible(const qp::QpProblem& p) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.num_constraints(); ++i) {
    const double c = p.A(i, 0);
    const double d = p.A(i, 1);
    const double b = p.theta[i];
    if (d != 0.0) continue;
    if (c > 0.0)
      hi = std::min(hi, b / c);
    else if (c < 0.0)
      lo = std::max(lo, b / c);
    else if (b < -1e-12)
      return false;
  }
  return lo <= hi + 1e-12;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

// rejection sampler over the strictly safe band used by the pointwise checks
std::vector<acc::AccState> sample_safe_states(std::mt19937& rng, std::size_t count,
                                              const acc::AccParams& prm) {
  std::uniform_real_distribution<double> vd(0.0, 30.0);
  std::uniform_real_distribution<double> zd(10.5, 150.0);
  std::vector<acc::AccState> states;
  while (states.size() < count) {
    const acc::AccState s{vd(rng), zd(rng)};
    if (acc::barrier_value(s, prm) > 0.0) states.push_back(s);
  }
  return states;
}

Criterion check_qp_oracle() {
  Criterion c{"interior-point solutions match active-set enumeration"};
  const auto t0 = Clock::now();

  std::mt19937 rng(424242);
  std::vector<qp::QpProblem> problems;
  problems.reserve(500);
  for (int i = 0; i < 500; ++i) problems.push_back(oracles::random_feasible_qp(rng));

  std::atomic<int> optimal{0}, matched{0}, oracle_ok{0};
  std::vector<double> worst_obj(problems.size(), 0.0), worst_v(problems.size(), 0.0);

  const std::size_t workers = std::max(2u, std::thread::hardware_concurrency());
  std::vector<std::future<void>> futures;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < workers; ++w)
    futures.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next.fetch_add(1); i < problems.size(); i = next.fetch_add(1)) {
        const auto ref = oracles::active_set_reference(problems[i]);
        if (!ref.feasible) continue;
        ++oracle_ok;
        const auto sol = qp::solve(problems[i]);
        if (sol.status != qp::SolveStatus::Optimal) continue;
        ++optimal;
        const double obj = oracles::qp_objective(problems[i], sol.v_star);
        const double obj_err = std::abs(obj - ref.objective);
        double v_err = 0.0;
        for (std::size_t j = 0; j < ref.v.size(); ++j)
          v_err = std::max(v_err, std::abs(sol.v_star[j] - ref.v[j]));
        worst_obj[i] = obj_err;
        worst_v[i] = v_err;
        if (obj_err <= 1e-6 * (1.0 + std::abs(ref.objective)) && v_err <= 1e-5) ++matched;
      }
    }));
  for (auto& f : futures) f.get();

  const double elapsed = seconds_since(t0);
  const double max_obj = *std::max_element(worst_obj.begin(), worst_obj.end());
  const double max_v = *std::max_element(worst_v.begin(), worst_v.end());
  c.pass = oracle_ok == 500 && optimal == 500 && matched == 500 && elapsed < 5.0;
  c.detail = std::to_string(optimal.load()) + "/500 optimal, " +
             std::to_string(matched.load()) + "/500 matched, max |d obj| = " + fmt(max_obj) +
             ", max |d v| = " + fmt(max_v) + ", " + fmt(elapsed) + " s";
  return c;
}

Criterion check_safety(const std::vector<Run>& runs, double elapsed) {
  Criterion c{"gap margin and barrier stay nonnegative for both designs"};
  double min_theta = std::numeric_limits<double>::infinity();
  double min_big = std::numeric_limits<double>::infinity();
  int failures = 0;
  for (const auto& run : runs)
    for (const auto& rec : run.traj) {
      min_theta = std::min(min_theta, rec.theta);
      min_big = std::min(min_big, rec.big_theta);
      if (rec.qp_status != qp::SolveStatus::Optimal) ++failures;
    }
  c.pass = runs.size() == 12 && min_theta >= -1e-3 && min_big >= -1e-3 &&
           failures == 0 && elapsed < 2.0;
  c.detail = "min gap margin = " + fmt(min_theta) + " m, min barrier = " + fmt(min_big) +
             ", solver failures = " + std::to_string(failures) + ", " + fmt(elapsed) + " s";
  return c;
}

Criterion check_speed_settling(const std::vector<Run>& runs) {
  Criterion c{"speed settles at the lead speed after the overshoot phase"};
  double worst_final = 0.0;
  bool rises = true;
  for (const auto& run : runs) {
    if (run.kind != acc::BarrierKind::Ncbf) continue;
    const double final_v = run.traj.back().state.v;
    worst_final = std::max(worst_final, std::abs(final_v - 13.89));
    if (run.v0 <= 15.0) {
      double vmax = run.v0;
      for (const auto& rec : run.traj) vmax = std::max(vmax, rec.state.v);
      if (vmax < run.v0 + 1.0) rises = false;
    }
  }
  c.pass = worst_final <= 0.1 && rises;
  c.detail = "max |v(50 s) - 13.89| = " + fmt(worst_final) + " m/s, overshoot present: " +
             (rises ? "yes" : "no");
  return c;
}

Criterion check_terminal_gap(const std::vector<Run>& long_runs) {
  Criterion c{"terminal gap sits on the barrier-zero locus"};
  // gap value where the barrier vanishes at matched speed, by bisection
  const auto locus = [](double z) {
    return (z - 10.0) - 0.09 * (std::hypot(13.99, z + 0.1) + 0.01);
  };
  double lo = 10.5, hi = 20.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (locus(lo) * locus(mid) <= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  const double root = 0.5 * (lo + hi);

  double z_min = std::numeric_limits<double>::infinity();
  double z_max = -z_min;
  double worst_gap_err = 0.0;
  for (const auto& run : long_runs) {
    const double zf = run.traj.back().state.z;
    z_min = std::min(z_min, zf);
    z_max = std::max(z_max, zf);
    worst_gap_err = std::max(worst_gap_err, std::abs(zf - root));
  }
  c.pass = std::abs(root - 11.644878205094354) <= 1e-9 && z_min >= 11.4 && z_max <= 11.9 &&
           worst_gap_err <= 0.25;
  c.detail = "locus root = " + fmt(root) + " m, z(100 s) in [" + fmt(z_min) + ", " +
             fmt(z_max) + "], max |z - root| = " + fmt(worst_gap_err);
  return c;
}

Criterion check_saturation(const std::vector<const std::vector<Run>*>& run_sets) {
  Criterion c{"wheel force stays inside the actuator box"};
  double worst = 0.0;
  long samples = 0;
  for (const auto* runs : run_sets)
    for (const auto& run : *runs)
      for (const auto& rec : run.traj) {
        worst = std::max(worst, std::abs(rec.u));
        ++samples;
      }
  c.pass = worst <= 6474.6 + 1e-9;
  c.detail = "max |u| = " + fmt(worst) + " N over " + std::to_string(samples) + " samples";
  return c;
}

Criterion check_gap_ordering(const std::vector<Run>& runs) {
  Criterion c{"exponential barrier holds a tighter steady gap than the chain"};
  std::map<double, double> ncbf_gap, hocbf_gap;
  int violations = 0;
  for (const auto& run : runs) {
    (run.kind == acc::BarrierKind::Ncbf ? ncbf_gap : hocbf_gap)[run.v0] =
        run.traj.back().state.z;
    for (const auto& rec : run.traj)
      if (rec.theta < -1e-3) ++violations;
  }
  bool ordered = ncbf_gap.size() == kSweep.size() && hocbf_gap.size() == kSweep.size();
  double min_slack = std::numeric_limits<double>::infinity();
  for (const double v0 : kSweep) {
    const double slack = hocbf_gap[v0] - ncbf_gap[v0];
    min_slack = std::min(min_slack, slack);
    if (slack <= 0.0) ordered = false;
  }
  c.pass = ordered && violations == 0;
  c.detail = "min gap(chain) - gap(exp) = " + fmt(min_slack) +
             " m, safety violations = " + std::to_string(violations);
  return c;
}

Criterion check_feasibility_theorem(const std::vector<Run>& runs,
                                    const acc::AccParams& prm) {
  Criterion c{"pointwise condition implies a solvable step everywhere it holds"};
  std::mt19937 rng(20250819);
  const auto states = sample_safe_states(rng, 200, prm);
  int satisfied = 0, counterexamples = 0;
  for (const auto& s : states) {
    const auto rep = acc::feasibility_at(s, prm);
    if (!rep.satisfied) continue;
    ++satisfied;
    if (!step_feasible(acc::assemble_qp(s, prm, acc::BarrierKind::Ncbf)))
      ++counterexamples;
  }

  long valid = 0, holds = 0;
  bool final_y_ok = true;
  double max_final_y = -std::numeric_limits<double>::infinity();
  for (const auto& run : runs) {
    if (run.kind != acc::BarrierKind::Ncbf) continue;
    for (const auto& rec : run.traj) {
      if (rec.theta <= 0.0 || rec.big_theta <= 0.0) continue;
      ++valid;
      if (acc::feasibility_at(rec.state, prm).satisfied) ++holds;
    }
    const auto& last = run.traj.back();
    if (last.theta > 0.0 && last.big_theta > 0.0) {
      const double y = acc::feasibility_at(last.state, prm).y_value;
      max_final_y = std::max(max_final_y, y);
      if (y > 1e-6) final_y_ok = false;
    } else {
      final_y_ok = false;
    }
  }
  const double frac = valid > 0 ? static_cast<double>(holds) / valid : 0.0;
  c.pass = counterexamples == 0 && satisfied > 0 && frac >= 0.99 && final_y_ok;
  c.detail = std::to_string(satisfied) + "/200 sampled states hold, counterexamples = " +
             std::to_string(counterexamples) + ", closed-loop fraction = " + fmt(frac) +
             ", max final Y = " + fmt(max_final_y);
  return c;
}

Criterion check_gradients(const acc::AccParams& prm) {
  Criterion c{"analytic gradients track central differences"};
  const auto sys = acc::make_system(prm);
  const auto sf = acc::gap_safety(prm);
  const auto sub = acc::make_speed_subsystem(prm);
  const auto clf = acc::speed_clf(prm);

  std::mt19937 rng(8675309);
  const auto states = sample_safe_states(rng, 100, prm);
  const auto big = [&](const linalg::Vector& zeta) {
    return cbf::ncbf_value(sf.value(zeta), zeta, prm.ncbf);
  };
  const auto vfun = [&](const linalg::Vector& zeta) { return cbf::clf_value(clf, zeta); };

  double worst = 0.0;
  for (const auto& s : states) {
    const linalg::Vector zeta{s.v, s.z};
    const auto grad = cbf::ncbf_gradient(sys, sf, zeta, prm.ncbf);
    const auto fd = oracles::central_difference_gradient(big, zeta);
    for (std::size_t i = 0; i < 2; ++i) worst = std::max(worst, rel_err(grad[i], fd[i]));

    const linalg::Vector speed{s.v};
    const auto cg = cbf::clf_gradient(clf, speed);
    const auto cfd = oracles::central_difference_gradient(vfun, speed);
    worst = std::max(worst, rel_err(cg[0], cfd[0]));
  }
  c.pass = worst < 1e-5;
  c.detail = "max relative error = " + fmt(worst) + " over 100 states";
  return c;
}

Criterion check_tracking_bound(const std::vector<Run>& runs, const acc::AccParams& prm) {
  Criterion c{"tracking energy stays under the comparison bound"};
  int violated = 0;
  double worst_m = -std::numeric_limits<double>::infinity();
  for (const auto& run : runs) {
    std::vector<feasibility::TimedValue> series;
    series.reserve(run.traj.size());
    for (const auto& rec : run.traj) series.push_back({rec.t, rec.v_lyap});
    const auto rep = feasibility::tracking_bound_check(series, prm.chi3, 1.0);
    worst_m = std::max(worst_m, rep.empirical_m);
    if (rep.violated_at) ++violated;
  }
  c.pass = violated == 0 && runs.size() == 12;
  c.detail = "violations = " + std::to_string(violated) +
             ", max empirical decay excess = " + fmt(worst_m);
  return c;
}

Criterion check_determinism(const acc::AccParams& prm, std::vector<Run>* extra_runs) {
  Criterion c{"repeat runs are byte-identical and the csv re-derives"};
  bool identical = true;
  double worst_rederive = 0.0;
  for (const auto kind : {acc::BarrierKind::Ncbf, acc::BarrierKind::Hocbf}) {
    const auto a = acc::simulate({20.0, 100.0}, prm, kind);
    const auto b = acc::simulate({20.0, 100.0}, prm, kind);
    const std::string csv_a = acc::trajectory_csv(a);
    if (csv_a != acc::trajectory_csv(b)) identical = false;

    std::istringstream in(csv_a);
    const auto parsed = acc::parse_trajectory_csv(in);
    if (parsed.size() != a.size()) identical = false;
    for (const auto& rec : parsed) {
      const double theta = rec.state.z - prm.gap_min;
      const double big = acc::barrier_value(rec.state, prm);
      const double vl = (rec.state.v - prm.v_target) * (rec.state.v - prm.v_target);
      worst_rederive = std::max({worst_rederive,
                                 std::abs(theta - rec.theta) / (1.0 + std::abs(rec.theta)),
                                 std::abs(big - rec.big_theta) / (1.0 + std::abs(rec.big_theta)),
                                 std::abs(vl - rec.v_lyap) / (1.0 + std::abs(rec.v_lyap))});
    }
    extra_runs->push_back({kind, 20.0, a});
    extra_runs->push_back({kind, 20.0, b});
  }
  c.pass = identical && worst_rederive <= 1e-9;
  c.detail = std::string("byte-identical: ") + (identical ? "yes" : "no") +
             ", max re-derivation error = " + fmt(worst_rederive);
  return c;
}

}  // namespace

int main() {
  std::vector<Criterion> results;
  try {
    const acc::AccParams defaults;

    Criterion qp_c = check_qp_oracle();

    const auto sweep_t0 = Clock::now();
    const std::vector<Run> runs = sweep_runs(
        defaults, {acc::BarrierKind::Ncbf, acc::BarrierKind::Hocbf});
    const double sweep_elapsed = seconds_since(sweep_t0);

    acc::AccParams long_prm = defaults;
    long_prm.horizon = 100.0;
    const std::vector<Run> long_runs = sweep_runs(long_prm, {acc::BarrierKind::Ncbf});

    std::vector<Run> repeat_runs;
    Criterion det_c = check_determinism(defaults, &repeat_runs);

    results.push_back(std::move(qp_c));
    results.push_back(check_safety(runs, sweep_elapsed));
    results.push_back(check_speed_settling(runs));
    results.push_back(check_terminal_gap(long_runs));
    results.push_back(check_saturation({&runs, &long_runs, &repeat_runs}));
    results.push_back(check_gap_ordering(runs));
    results.push_back(check_feasibility_theorem(runs, defaults));
    results.push_back(check_gradients(defaults));
    results.push_back(check_tracking_bound(runs, defaults));
    results.push_back(std::move(det_c));
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance suite aborted: " << e.what() << "\n";
    return 1;
  }

  bool all_pass = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& c = results[i];
    all_pass = all_pass && c.pass;
    std::cout << (c.pass ? "PASS" : "FAIL") << " " << std::setw(2) << (i + 1) << " "
              << c.name << " -- " << c.detail << "\n";
  }
  std::cout << (all_pass ? "acceptance: all criteria passed"
                         : "acceptance: criteria failed")
            << "\n";
  return all_pass ? 0 : 1;
}
