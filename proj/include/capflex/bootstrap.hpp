#pragma once

#include <array>
#include <memory>
#include <string>

#include "capflex/field.hpp"
#include "capflex/stage.hpp"

namespace capflex {

// Diagnostics from the bootstrap pipeline, serializable with a stable key
// order.  Wall-clock timing is reported on stderr only, never in the payload.
struct BootstrapReport {
  // first approximation (twist)
  double rho = 0.0;            // measured positive-gap scale on the collar ball
  double lambda_boot = 0.0;    // accepted twist frequency
  double twist_error = 0.0;    // max nodewise defect of the twist identity
  double twist_error_budget = 0.0;  // sigma0_tilde * rho
  double sandwich_lower = 0.0;      // two-sided gap bound margins, min over nodes
  double sandwich_upper = 0.0;
  double decomp_min_coefficient = 0.0;
  double decomp_residual = 0.0;
  double smallness_measured = 0.0;
  double lambda_bar = 0.0;  // measured pinching of h_tilde against delta

  // codimension-raising map
  double mu = 0.0;
  double w_sup = 0.0;        // ||w - x0||_0
  double w_sup_bound = 0.0;  // 3 max(h_tilde^{1/2} c_k) / mu
  double w_smallness = 0.0;  // max |tau_w - Id| over the solve region
  double defect_fit_C = 0.0;  // max |g_tilde - u_tilde#e - delta_1 e| * mu^2 deep inside

  // stage-0 hypothesis margins
  double g_seminorm[3] = {0.0, 0.0, 0.0};    // [g_tilde]_k, k = 0..2
  double h0_seminorm[4] = {0.0, 0.0, 0.0, 0.0};  // [h_0]_k, k = 0..3
  double h0_min_ratio = 0.0;  // h_0 / delta_1 pinching on the working ball
  double h0_max_ratio = 0.0;
  double h0_linearity = 0.0;  // slope spread of h_0/(1-r) on the outer annulus
  double hyp25_lower = 0.0;   // stage-0 sandwich margins
  double hyp25_upper = 0.0;
  double rim_value_gap = 0.0;     // |w - x0| on the rim
  double rim_jacobian_gap = 0.0;  // |grad w| on the rim

  std::string to_json() const;
};

// First approximation: corrugation flattening plus an isotropic twist.
struct FirstApproximation {
  std::shared_ptr<JetField> u_tilde;  // dim 8, equals u outside B_{1-delta}
  ScalarField h_tilde;
  ScalarField eta_boot;
  double delta = 0.0;
  double rho = 0.0;
  double lambda_boot = 0.0;
};

// Analytic corrugation pairs cancelling the radial/angular anisotropy of
// g - u#e inside fixed annular windows (tuned for the default cap geometry).
// The returned map's value and jacobian are added to u; they live in
// components otherwise zero in u and vanish outside the windows.
AnalyticMap anisotropy_flattener(GridPtr grid, const JetField& u, const MetricField& g);

// Twists u inside the collar B_{1-delta} until the deficit g - u_tilde#e is
// pinched around the blended gap field h_tilde with relative budget
// sigma0_tilde*(2+eta) at every node.  The twist frequency doubles until the
// measured identity defect is below sigma0_tilde*rho and both margins are
// nonnegative.  Throws DecompNotPositive (coefficient failure, with location)
// or FrequencyUnresolvable (grid cannot resolve a sufficient frequency).
FirstApproximation first_approximation(const JetField& u, const ScalarField& h,
                                       const MetricField& g, double sigma0_tilde,
                                       double delta, BootstrapReport* report = nullptr);

// Completed bootstrap: twisted map, codimension-raising map and reduced target.
struct BootstrapState {
  std::shared_ptr<const JetField> u_tilde;  // dim 8
  ScalarField h_tilde;
  ScalarField eta_boot;
  std::shared_ptr<const JetField> w;          // dim 6, = x0 with zero jacobian on the rim
  std::shared_ptr<const MetricField> g_tilde;  // g - w#e
  std::array<double, 6> x0 = {};
  double delta = 0.0;
  double rho = 0.0;
  double mu = 0.0;
};

// Oscillating map w at frequency mu = C_hat/delta_1 absorbing the deficit
// down to delta_1 e on the working ball; g_tilde = g - w#e.  Throws
// SmallnessViolated when the rescaled deficit leaves the solvable cone.
BootstrapState build_w(const FirstApproximation& fa, const MetricField& g,
                       const std::array<double, 6>& x0, double C_hat,
                       const ParameterSchedule& sched, BootstrapReport* report = nullptr);

// Assembles the stage-0 state (v_0 = u_tilde) and checks its entry
// hypotheses numerically: target seminorm growth, gap-field linearity and
// pinching, gap seminorm decay, and the two-sided deficit bound.  Throws
// HypothesisFailed naming the violated inequality index (21)-(25).
StageState init_stage_state(const BootstrapState& bs, const ParameterSchedule& sched,
                            BootstrapReport* report = nullptr);

}  // namespace capflex
