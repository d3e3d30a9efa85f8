#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ncbf/errors.hpp"
#include "ncbf/feasibility.hpp"

using namespace ncbf;
using namespace ncbf::feasibility;
using cbf::ncbf_value;
using linalg::Matrix;

namespace {

constexpr double kMass = 1650.0;
constexpr double kVFront = 13.89;

double resist(double v) {
  const double sgn = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  return 0.1 * sgn + 5.0 * v + 0.25 * v * v;
}

AffineSystem car_system() {
  AffineSystem sys;
  sys.n = 2;
  sys.q = 1;
  sys.f = [](const Vector& zeta) -> Vector {
    return {-resist(zeta[0]) / kMass, kVFront - zeta[0]};
  };
  sys.g = [](const Vector&) {
    Matrix g(2, 1);
    g(0, 0) = 1.0 / kMass;
    return g;
  };
  return sys;
}

SafetyFunction gap_function() {
  SafetyFunction sf;
  sf.value = [](const Vector& zeta) { return zeta[1] - 10.0; };
  sf.gradient = [](const Vector&) -> Vector { return {0.0, 1.0}; };
  sf.relative_degree = 2;
  return sf;
}

NcbfParams barrier_params() { return NcbfParams{0.09, 0.01, {0.1, 0.1}, 0.2}; }

ControlBounds force_box() {
  ControlBounds bounds;
  bounds.v_min = {-6474.6};
  bounds.v_max = {6474.6};
  return bounds;
}

}  // namespace

TEST_CASE("input direction of the shifted state") {
  const Vector g = gd(car_system(), {20.0, 100.0}, {0.1, 0.1});
  REQUIRE(g.size() == 1);
  CHECK(g[0] == doctest::Approx(20.1 / 1650.0).epsilon(1e-14));
}

TEST_CASE("condition holds at the cruising state") {
  const FeasibilityReport rep = theorem_condition(car_system(), gap_function(),
                                                  {20.0, 100.0}, barrier_params(), force_box());
  CHECK(rep.satisfied);
  CHECK(rep.lhs == doctest::Approx(0.0027654336031206574).epsilon(1e-12));
  CHECK(rep.alpha_theta == doctest::Approx(0.24130500696695903).epsilon(1e-12));
  CHECK(rep.margin == doctest::Approx(0.23853957336383838).epsilon(1e-12));
  CHECK(rep.y_value == doctest::Approx(0.0010387667474180686).epsilon(1e-12));
}

TEST_CASE("condition fails fast and close") {
  // near the gap floor at high speed the drift overwhelms the barrier decay
  const FeasibilityReport rep = theorem_condition(car_system(), gap_function(),
                                                  {54.0, 15.2}, barrier_params(), force_box());
  CHECK_FALSE(rep.satisfied);
  CHECK(rep.lhs == doctest::Approx(0.6898829967114383).epsilon(1e-12));
  CHECK(rep.margin == doctest::Approx(-0.6893875379412245).epsilon(1e-12));
  CHECK(rep.y_value == doctest::Approx(277.79432659874175).epsilon(1e-12));
}

TEST_CASE("huge symmetric bounds make the condition easy") {
  ControlBounds wide;
  wide.v_min = {-1e9};
  wide.v_max = {1e9};
  const FeasibilityReport rep = theorem_condition(car_system(), gap_function(),
                                                  {54.0, 15.2}, barrier_params(), wide);
  CHECK(rep.satisfied);
}

TEST_CASE("condition requires a strictly safe state") {
  CHECK_THROWS_AS(theorem_condition(car_system(), gap_function(), {20.0, 9.0},
                                    barrier_params(), force_box()),
                  PreconditionViolated);
  // positive margin but negative barrier (inside the exponential shell)
  CHECK_THROWS_AS(theorem_condition(car_system(), gap_function(), {20.0, 10.5},
                                    barrier_params(), force_box()),
                  PreconditionViolated);
}

TEST_CASE("worst case equals the equilibrium diagnostic times the barrier terms") {
  const AffineSystem sys = car_system();
  const SafetyFunction sf = gap_function();
  const NcbfParams prm = barrier_params();
  const ControlBounds bounds = force_box();
  std::mt19937 rng(2025);
  std::uniform_real_distribution<double> vd(0.0, 30.0);
  std::uniform_real_distribution<double> zd(12.5, 150.0);
  int checked = 0;
  for (int trial = 0; trial < 400 && checked < 200; ++trial) {
    const Vector zeta{vd(rng), zd(rng)};
    if (ncbf_value(sf.value(zeta), zeta, prm) <= 0.0) continue;
    ++checked;
    const FeasibilityReport rep = theorem_condition(sys, sf, zeta, prm, bounds);
    const double big = ncbf_value(sf.value(zeta), zeta, prm);
    const double reconstructed = rep.y_value * big * (big + 1.0);
    const double scale = 1.0 + std::abs(rep.lhs);
    CHECK(std::abs(rep.lhs - reconstructed) <= 1e-9 * scale);
  }
  CHECK(checked == 200);
}

TEST_CASE("equilibrium diagnostic is negative near the matched-speed locus") {
  const double y = y_function(car_system(), gap_function(), {kVFront, 12.0},
                              barrier_params(), force_box());
  CHECK(y == doctest::Approx(-0.9678215036316905).epsilon(1e-12));
  CHECK(y < 0.0);
}

TEST_CASE("bound symmetrization") {
  ControlBounds in;
  in.v_min = {-2.0, -1.0, -3.0};
  in.v_max = {1.0, 3.0, 3.0};
  const ControlBounds out = symmetrize_bounds(in);
  CHECK(out.v_max[0] == 1.0);
  CHECK(out.v_max[1] == 1.0);
  CHECK(out.v_max[2] == 3.0);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(out.v_min[j] == -out.v_max[j]);
    CHECK(out.v_min[j] >= in.v_min[j]);
    CHECK(out.v_max[j] <= in.v_max[j]);
  }
  // idempotent
  const ControlBounds again = symmetrize_bounds(out);
  for (std::size_t j = 0; j < 3; ++j) CHECK(again.v_max[j] == out.v_max[j]);

  ControlBounds bad;
  bad.v_min = {0.5};
  bad.v_max = {1.0};
  CHECK_THROWS_AS(symmetrize_bounds(bad), PreconditionViolated);
  bad.v_min = {-1.0};
  bad.v_max = {-0.5};
  CHECK_THROWS_AS(symmetrize_bounds(bad), PreconditionViolated);
}

TEST_CASE("tracking bound on a constant series") {
  std::vector<TimedValue> traj;
  for (int k = 0; k <= 100; ++k) traj.push_back({0.1 * k, 1.0});
  const TrackingBoundReport rep = tracking_bound_check(traj, 2.0, 1.0);
  CHECK(rep.empirical_m == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_FALSE(rep.violated_at.has_value());
  CHECK(rep.epsilon == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.v0 == 1.0);
  CHECK(rep.chi3 == 2.0);
}

TEST_CASE("tracking bound on an exact exponential decay") {
  const double chi3 = 10.0;
  const double v0 = 5.0;
  std::vector<TimedValue> traj;
  for (int k = 0; k < 1000; ++k) {
    const double t = 1e-4 * k;
    traj.push_back({t, v0 * std::exp(-chi3 * t)});
  }
  const TrackingBoundReport rep = tracking_bound_check(traj, chi3, 1.0);
  CHECK_FALSE(rep.violated_at.has_value());
  CHECK(rep.empirical_m <= 0.01 * v0);  // discretization residue only
  CHECK(rep.empirical_m >= 0.0);
}

TEST_CASE("tracking bound flags a late jump") {
  const std::vector<TimedValue> traj{{0.0, 1.0}, {1.0, 0.5}, {2.0, 5.0}};
  const TrackingBoundReport rep = tracking_bound_check(traj, 1.0, 1.0);
  CHECK(rep.empirical_m == doctest::Approx(5.0).epsilon(1e-12));
  REQUIRE(rep.violated_at.has_value());
  CHECK(*rep.violated_at == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.epsilon == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("tracking bound input validation") {
  CHECK_THROWS_AS(tracking_bound_check({}, 1.0, 1.0), PreconditionViolated);

  const std::vector<TimedValue> swapped{{1.0, 1.0}, {0.5, 1.0}};
  CHECK_THROWS_AS(tracking_bound_check(swapped, 1.0, 1.0), PreconditionViolated);

  const std::vector<TimedValue> single{{0.0, 4.0}};
  const TrackingBoundReport rep = tracking_bound_check(single, 1.0, 1.0);
  CHECK(rep.empirical_m == 0.0);
  CHECK(rep.epsilon == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_FALSE(rep.violated_at.has_value());
}
