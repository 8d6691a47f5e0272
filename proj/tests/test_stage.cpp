#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "capflex/capgeom.hpp"
#include "capflex/errors.hpp"
#include "capflex/stage.hpp"

using namespace capflex;

namespace {

ParameterSchedule test_constants() {
  ParameterSchedule c;
  c.C_tilde = 1.0;
  c.C_hat = 1.0;
  c.sigma0 = 0.2;
  c.R = 2.0;
  c.Lambda = 4.0;
  c.C0 = 20.0;
  c.Q = 0;
  return c;
}

// Planar inclusion plus an optional bump in the seventh component, with exact
// jacobians.  The bump vanishes for r >= r_out so the map matches the anchor
// outside the wave band.
AnalyticMap planar_map(double amp, double wavenum, double r_out, double width) {
  AnalyticMap m;
  m.dim = 8;
  auto bump = [=](double r) { return smooth_step((r_out - r) / width); };
  auto dbump = [=](double r) { return -smooth_step_deriv((r_out - r) / width) / width; };
  m.value = [=](double x1, double x2, double* out) {
    std::fill(out, out + 8, 0.0);
    out[0] = x1;
    out[1] = x2;
    const double r = std::hypot(x1, x2);
    out[7] = amp * bump(r) * std::sin(wavenum * x1);
  };
  m.jacobian = [=](double x1, double x2, double* out) {
    std::fill(out, out + 16, 0.0);
    out[0 * 2 + 0] = 1.0;
    out[1 * 2 + 1] = 1.0;
    const double r = std::hypot(x1, x2);
    const double s = std::sin(wavenum * x1), c = std::cos(wavenum * x1);
    const double db = r > 0.0 ? dbump(r) / r : 0.0;
    out[7 * 2 + 0] = amp * (db * x1 * s + bump(r) * wavenum * c);
    out[7 * 2 + 1] = amp * db * x2 * s;
  };
  return m;
}

// A gap field matching the iteration's own construction: linear lambda_h(1-r)
// outside the band at R*delta, blended to a constant plateau inside.
ScalarField synthetic_gap(GridPtr g, double delta, double R, double sigma0,
                          double lambda_h) {
  const CutoffProfile prof = cutoff_profile(delta, R);
  ScalarField h(g);
  const double s2 = sigma0 * sigma0;
  for (int idx = 0; idx < g->size(); ++idx) {
    const double e = prof.value(g->radius_of(idx));
    const double phi =
        (1.0 - s2 * (1.0 + e)) / (1.0 - s2 * (1.0 + e) * (1.0 + e)) * (1.0 - e * e);
    const double psi = e * e / (1.0 - s2 * (1.0 + e) * (1.0 + e));
    h.at(idx) = phi * lambda_h * (1.0 - g->radius_of(idx)) + psi * delta;
  }
  return h;
}

StageState make_synthetic_state(GridPtr g, const ParameterSchedule& sched,
                                double ripple_amp, double bump_amp) {
  const double d1 = sched.delta(1);
  StageState st;
  st.q = 0;
  st.sched = sched;
  auto u = std::make_shared<JetField>(
      sample(planar_map(0.0, 0.0, 0.5, 0.1), g));
  u->analytic_jac = true;
  st.u_anchor = u;
  // the bump must vanish outside B_{1 - R delta_1}
  const double r_out = 1.0 - sched.R * d1;
  auto v = std::make_shared<JetField>(
      sample(planar_map(bump_amp, 6.0, r_out, 0.15), g));
  v->analytic_jac = true;
  st.v = v;
  st.h = synthetic_gap(g, d1, sched.R, sched.sigma0, 1.0);
  st.eta = build_cutoff(d1, sched.R, g);

  auto gt = std::make_shared<MetricField>(g);
  for (int idx = 0; idx < g->size(); ++idx) {
    double m00 = 0, m01 = 0, m11 = 0;
    for (int i = 0; i < 8; ++i) {
      m00 += v->dvalue(idx, i, 0) * v->dvalue(idx, i, 0);
      m01 += v->dvalue(idx, i, 0) * v->dvalue(idx, i, 1);
      m11 += v->dvalue(idx, i, 1) * v->dvalue(idx, i, 1);
    }
    const double rip =
        1.0 + ripple_amp * std::sin(3.0 * g->x1_of(idx)) * std::cos(2.0 * g->x2_of(idx));
    const double gap = st.h.at(idx) * rip;
    gt->set(idx, Sym2{m00 + gap, m01, m11 + gap});
  }
  st.g_target = gt;
  return st;
}

}  // namespace

TEST_CASE("make_schedule: closed-form ladder values") {
  ParameterSchedule c = test_constants();
  c.R = 1.0;
  ParameterSchedule s = make_schedule(16.0, 1.5, 2.0, c);
  CHECK(s.delta(0) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(s.delta(1) == doctest::Approx(0.015625).epsilon(1e-15));
  CHECK(s.lambda(0) == doctest::Approx(4096.0).epsilon(1e-13));
  CHECK(s.ell(0) == doctest::Approx(0.125 / (0.25 * 4096.0)).epsilon(1e-13));
}

TEST_CASE("make_schedule: exponent ordering is enforced") {
  ParameterSchedule c = test_constants();
  CHECK_THROWS_AS(make_schedule(16.0, 1.5, 1.5, c), HierarchyViolated);
  CHECK_THROWS_AS(make_schedule(16.0, 2.0, 1.5, c), HierarchyViolated);
  CHECK_THROWS_AS(make_schedule(16.0, 0.9, 1.5, c), HierarchyViolated);
  CHECK_THROWS_AS(make_schedule(0.5, 1.5, 2.0, c), HierarchyViolated);
  ParameterSchedule bad = c;
  bad.sigma0 = 0.6;
  CHECK_THROWS_AS(make_schedule(16.0, 1.5, 2.0, bad), HierarchyViolated);
}

TEST_CASE("make_schedule: error-size budget can fail") {
  ParameterSchedule c = test_constants();
  c.C_hat = 1e9;
  try {
    make_schedule(16.0, 1.5, 2.0, c);
    CHECK(false);
  } catch (const HierarchyViolated& e) {
    CHECK(std::string(e.what()).find("C_hat") != std::string::npos);
  }
}

TEST_CASE("run_stage: degenerate flat input recovers sqrt(2/3) coefficients") {
  auto g = make_grid(257);
  ParameterSchedule sched = make_schedule(3.07, 1.3, 2.16, test_constants());
  StageState st = make_synthetic_state(g, sched, 0.0, 0.0);
  // overwrite the target so tau is exactly the identity: gap = h + delta_2
  const double d2 = sched.delta(2);
  auto gt = std::make_shared<MetricField>(g);
  for (int idx = 0; idx < g->size(); ++idx) {
    const double gap = st.h.at(idx) + d2;
    gt->set(idx, Sym2{1.0 + gap, 0.0, 1.0 + gap});
  }
  st.g_target = gt;

  StageReport rep;
  StageState next = run_stage(st, &rep);
  CHECK(next.q == 1);
  CHECK(rep.ansatz_residual <= 1e-8);
  CHECK(rep.decomp_residual <= 1e-10);

  // deep inside the cutoff plateau the added metric is exactly (h + d2 - d2) e
  const double expect = std::sqrt(2.0 / 3.0);
  double worst = 0.0;
  for (int idx : g->annulus(0.0, 0.2)) {
    double m00 = 0, m11 = 0, m01 = 0;
    for (int i = 0; i < 8; ++i) {
      m00 += next.v->dvalue(idx, i, 0) * next.v->dvalue(idx, i, 0);
      m01 += next.v->dvalue(idx, i, 0) * next.v->dvalue(idx, i, 1);
      m11 += next.v->dvalue(idx, i, 1) * next.v->dvalue(idx, i, 1);
    }
    const double gap = st.h.at(idx);
    worst = std::max({worst, std::fabs(m00 - 1.0 - gap), std::fabs(m01),
                      std::fabs(m11 - 1.0 - gap)});
  }
  CHECK(worst <= 1e-8);
  // the coefficients themselves: tau = Id and all perturbations vanish deep
  // inside, so the Newton solve lands on the symmetric point
  CHECK(rep.decomp_min_coefficient > 0.25);
  CHECK(rep.decomp_min_coefficient <= expect + 1e-9);
}

TEST_CASE("run_stage: synthetic state passes all stage conclusions") {
  auto g = make_grid(257);
  ParameterSchedule sched = make_schedule(3.07, 1.3, 2.16, test_constants());
  StageState st = make_synthetic_state(g, sched, 0.05, 0.003);

  StageReport rep;
  StageState next = run_stage(st, &rep);

  CHECK(rep.sandwich_lower >= 0.0);
  CHECK(rep.sandwich_upper >= 0.0);
  CHECK(rep.ansatz_residual <= 1e-8);
  CHECK(rep.frame_orthonormality <= 1e-10);
  CHECK(rep.frame_tangency <= 1e-8);
  CHECK(rep.decomp_residual <= 1e-10);
  CHECK(rep.decomp_median_newton_iters <= 8);
  CHECK(rep.decomp_min_coefficient > sched.r0);
  CHECK(rep.rim_value_gap <= 1e-12);
  CHECK(rep.rim_jacobian_gap <= 1e-12);
  CHECK(rep.measured_C0_c0 <= sched.C0);
  CHECK(rep.measured_C0_c1 <= sched.C0);
  CHECK(rep.h_min_ratio >= 1.0 / sched.Lambda);
  CHECK(rep.h_max_ratio <= sched.Lambda);

  // outside the wave band nothing moved and the gap field is untouched
  const double edge = 1.0 - sched.R * sched.delta(2);
  for (int idx : g->annulus(edge + 2.0 * g->spacing, 1.0)) {
    for (int i = 0; i < 8; ++i) {
      CHECK(std::fabs(next.v->value(idx, i) - st.u_anchor->value(idx, i)) <= 1e-13);
      for (int k = 0; k < 2; ++k)
        CHECK(std::fabs(next.v->dvalue(idx, i, k) - st.u_anchor->dvalue(idx, i, k)) <=
              1e-13);
    }
    CHECK(next.h.at(idx) == doctest::Approx(st.h.at(idx)).epsilon(1e-14));
  }

  // verify_stage recomputes the same margins from the two states
  StageReport rev = verify_stage(st, next);
  CHECK(rev.sandwich_lower == doctest::Approx(rep.sandwich_lower).epsilon(1e-12));
  CHECK(rev.increment_c0 == doctest::Approx(rep.increment_c0).epsilon(1e-12));

  // convergence table with a single increment
  auto rows = convergence_table({st, next}, 0.0, 2048, 1);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].admissible);
  CHECK(rows[0].measured > 0.0);
  auto bad = convergence_table({st, next}, 0.9, 2048, 1);
  CHECK(!bad[0].admissible);
}

TEST_CASE("run_stage: deterministic report serialization") {
  auto g = make_grid(257);
  ParameterSchedule sched = make_schedule(3.07, 1.3, 2.16, test_constants());
  StageState st1 = make_synthetic_state(g, sched, 0.05, 0.003);
  StageState st2 = make_synthetic_state(g, sched, 0.05, 0.003);
  StageReport r1, r2;
  run_stage(st1, &r1);
  run_stage(st2, &r2);
  CHECK(r1.to_json() == r2.to_json());
  CHECK(!r1.to_json().empty());
}

TEST_CASE("run_stage: frequency beyond the grid is rejected") {
  auto g = make_grid(257);
  ParameterSchedule c = test_constants();
  // same amplitude ladder, steeper frequency exponent: lambda_1 ~ 295, 4*295 > 256
  StageState st = make_synthetic_state(g, make_schedule(3.07, 1.3, 2.16, c), 0.0, 0.0);
  st.sched = make_schedule(3.07, 1.3, 3.0, c);
  CHECK_THROWS_AS(run_stage(st, nullptr), NyquistViolated);
}
