#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "capflex/decomp.hpp"
#include "capflex/field.hpp"

namespace capflex {

// Geometric double-exponential parameter ladder driving the iteration:
// amplitude delta_q, frequency lambda_q, mollification length ell_q.
struct ParameterSchedule {
  double a_base = 0.0;  // > 1
  double b = 0.0;       // 1 < b < c
  double c = 0.0;
  double C_tilde = 1.0;  // mollification length divisor
  double C_hat = 1.0;    // error-size budget constant
  double sigma0 = 0.2;   // sandwich slack, in ]0, 1/2[
  double R = 1.0;        // cutoff band multiplier, >= 1
  double Lambda = 1.0;   // pinching cap for the gap field, >= 1
  double C0 = 1.0;       // cap for measured norm constants, >= 1
  int Q = 0;             // number of stages the ladder was validated for
  double r0 = 0.25;            // coefficient floor for the decomposition
  double decomp_radius = 2.5;  // smallness guard for the Newton solve

  double delta(int q) const { return std::pow(a_base, -std::pow(b, q)); }
  double lambda(int q) const { return std::pow(a_base, c * std::pow(b, q + 1)); }
  double ell(int q) const {
    return std::sqrt(delta(q + 1) / delta(q)) / (C_tilde * lambda(q));
  }
};

// Builds the ladder and verifies, for every q = 0..Q, the ordering
//   delta_{q+1}^{-1} <= delta_{q+2}^{-1} <= ell_q^{-1} <= lambda_{q+1}
// and the error-size budget
//   C_hat * delta_{q+1} / (ell_q^2 lambda_{q+1}^2) <= delta_{q+2}.
// Throws HierarchyViolated naming the failing inequality and its q.
ParameterSchedule make_schedule(double a_base, double b, double c,
                                const ParameterSchedule& constants);

// Iteration state after stage q.  The anchor map and target metric are shared
// across stages and never mutated.
struct StageState {
  int q = 0;
  ParameterSchedule sched;
  std::shared_ptr<const JetField> u_anchor;   // dim 8, boundary jet donor
  std::shared_ptr<const MetricField> g_target;
  std::shared_ptr<const JetField> v;  // dim 8, current map
  ScalarField h;                      // metric gap scale
  ScalarField eta;                    // cutoff at band R*delta(q+1)
};

// Everything a stage measures, serializable with a stable key order.
// Wall-clock timing is reported on stderr only, never in the payload.
struct StageReport {
  int q = 0;
  double delta_next = 0.0;   // delta(q+1)
  double lambda_next = 0.0;  // lambda(q+1)
  double ell = 0.0;

  // sandwich margins, min over masked nodes (>= 0 means the bound holds)
  double sandwich_lower = 0.0;
  double sandwich_upper = 0.0;

  // increment norms of v_{q+1} - v_q and the constants they imply
  double increment_c0 = 0.0;
  double increment_c1 = 0.0;
  double measured_C0_c0 = 0.0;  // increment_c0 * lambda_{q+1} / delta_{q+1}^{1/2}
  double measured_C0_c1 = 0.0;  // increment_c1 / delta_{q+1}^{1/2}

  // gap field pinching Lambda^{-1} delta <= h <= Lambda delta on the band
  double h_min_ratio = 0.0;  // min h / delta
  double h_max_ratio = 0.0;  // max h / delta

  // decomposition diagnostics
  double decomp_residual = 0.0;
  double decomp_min_coefficient = 0.0;
  int decomp_max_newton_iters = 0;
  int decomp_median_newton_iters = 0;
  double smallness_measured = 0.0;  // max |tau-Id| + sum|M| + sum|Lam|

  // frame quality along the mollified map
  double frame_orthonormality = 0.0;
  double frame_tangency = 0.0;

  // nodewise defect of the assembled pullback against its closed form
  double ansatz_residual = 0.0;

  // boundary jet agreement with the anchor on the rim
  double rim_value_gap = 0.0;
  double rim_jacobian_gap = 0.0;

  // measured FD seminorms of the new map
  double v_c2_seminorm = 0.0;

  std::string to_json() const;
};

// One full iteration: mollify, decompose the rescaled gap, add three
// corrugation waves at frequency lambda(q+1), update the gap field.
// Throws NyquistViolated when the grid cannot resolve the new frequency and
// propagates decomposition/frame/mollifier errors.
StageState run_stage(const StageState& state, StageReport* report);

// Recomputes the stage conclusions from two consecutive states; never throws.
StageReport verify_stage(const StageState& prev, const StageState& next);

// One row per increment: measured C^{1,alpha} norm of v_{q+1}-v_q via the
// interpolation ||.||_1^{1-alpha} [.]_2^alpha against the geometric bound
// a^{-(1/2) b^q (1-2 alpha b c)}.
struct ConvergenceRow {
  int q = 0;
  double measured = 0.0;
  double predicted = 0.0;
  bool admissible = true;  // alpha < 1/(2bc)
};
std::vector<ConvergenceRow> convergence_table(const std::vector<StageState>& states,
                                              double alpha, int pair_budget = 4096,
                                              uint64_t seed = 1);

}  // namespace capflex
