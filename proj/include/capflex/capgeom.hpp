#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "capflex/field.hpp"

namespace capflex {

// Smooth unit step: 0 on ]-inf,0], 1 on [1,+inf[, S(t) + S(1-t) = 1.
double smooth_step(double t);
double smooth_step_deriv(double t);

// Geometry parameters of the spherical cap of radius R seen over the unit
// disk, together with the two free knobs of the radial reparametrization.
struct CapParams {
  double R = 2.0;
  double eta_param = 0.9;
  double eps_param = 0.05;

  double gamma() const { return R / std::sqrt(R * R - 1.0); }
  double a_cap() const { return std::sqrt(1.0 - 1.0 / (R * R)); }
  // slope of the outer linear piece of the reparametrization derivative
  double ramp_slope() const {
    const double g = gamma();
    return 1.0 - 1.0 / g + g * g * g / (R * R);
  }
  double beta() const;
};

// Throws ParamsInfeasible naming the violated inequality.
void check_params(const CapParams& p);

// Cap metric in Cartesian form g_ij = delta_ij + x_i x_j / (R^2 - |x|^2).
Sym2 cap_metric_at(double R, double x1, double x2);
MetricField cap_metric(double R, GridPtr grid);

// Radial reparametrization phi on [0, r_max]: smooth, increasing, phi(0) = 0,
// phi(1) = 1 exactly, phi'(1) = gamma, phi(r) = eta_param * r near the origin.
// The derivative is closed-form; values come from a dense quadrature table
// queried through cubic Hermite interpolation.
struct RadialProfile {
  double r_max = 1.5;
  double inv_dr = 0.0;
  std::vector<double> phi_tab;   // knot values of phi
  std::vector<double> dphi_tab;  // knot values of phi'
  std::function<double(double)> dphi;

  double value(double r) const;
  double deriv(double r) const { return dphi(r); }
};

RadialProfile build_phi(const CapParams& p);

// Strictly short map u(x) = (phi(r)/r) (x1, x2, 0, ..., 0) into R^dim with
// exact jacobian.  The profile is captured by shared pointer.
AnalyticMap short_map(const CapParams& p, std::shared_ptr<const RadialProfile> prof,
                      int dim = 8);
JetField build_short_map(const CapParams& p, GridPtr grid);

// Boundary error profile h(r) = 2(gamma - 1)(1 - r).
double boundary_gap(const CapParams& p, double r);
ScalarField build_h(const CapParams& p, GridPtr grid);

// Radial cutoff: 1 on |x| <= 1-(R+1)*delta, 0 on |x| >= 1-R*delta.
struct CutoffProfile {
  double delta = 0.0;
  double R = 0.0;

  double value(double r) const;
  double deriv(double r) const;  // d/dr
};

CutoffProfile cutoff_profile(double delta, double R);
// Throws Unresolvable if the transition band is thinner than 8 grid cells or
// the plateau region would be empty.
ScalarField build_cutoff(double delta, double R, GridPtr grid);

// Radial scan of the short-map hypotheses.  All margins must be positive:
//   shortness     min over ]0,1[ of min(R^2/(R^2-r^2) - phi'^2, 1 - (phi/r)^2)
//   lower, upper  min over 1-r in [1e-3, 1e-2] of the two-sided sandwich
//                 (1 -/+ sigma0_bar) h <= g - u#e <= (1 +/- ...) slack,
//                 evaluated on the polar-diagonal entries.
struct CapHypothesisMargins {
  double shortness = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

CapHypothesisMargins check_cap_hypotheses(const CapParams& p, const RadialProfile& prof,
                                          double sigma0_bar, int scan_points = 10000);

}  // namespace capflex
