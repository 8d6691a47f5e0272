#include "capflex/capgeom.hpp"

#include <algorithm>
#include <string>

#include "capflex/errors.hpp"

namespace capflex {

namespace {

// Cubic Hermite over a uniform table: p are values, m derivatives at the knots.
double hermite_eval(const std::vector<double>& p, const std::vector<double>& m, double lo,
                    double inv_h, double x) {
  const int n = static_cast<int>(p.size()) - 1;
  double t = (x - lo) * inv_h;
  if (t <= 0.0) return p.front();
  if (t >= static_cast<double>(n)) return p.back();
  int i = static_cast<int>(t);
  if (i >= n) i = n - 1;
  const double s = t - static_cast<double>(i), h = 1.0 / inv_h;
  const double p0 = p[static_cast<size_t>(i)], p1 = p[static_cast<size_t>(i) + 1];
  const double m0 = m[static_cast<size_t>(i)] * h, m1 = m[static_cast<size_t>(i) + 1] * h;
  const double s2 = s * s, s3 = s2 * s;
  return (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 +
         (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1;
}

constexpr double kGlx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                            0.5384693101056831, 0.9061798459386640};
constexpr double kGlw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                            0.4786286704993665, 0.2369268850561891};

// Transition 0 -> 1 on [0,1] built the classical way: the piecewise-linear ramp
// (0 below 1/4, slope 2, 1 above 3/4) convolved with a compact bump kernel of
// half-width 1/4.  Keeps the peak second derivative below 8.
struct StepTable {
  static constexpr int N = 8192;
  double inv_total = 0.0;               // kernel normalization
  std::vector<double> Phi;              // kernel CDF on [-1/4, 1/4]
  std::vector<double> H, dH, ddH;       // step value and derivatives on [0, 1]

  static double raw(double s) {
    const double u = 4.0 * s;
    return std::fabs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0;
  }
  double kernel(double s) const { return raw(s) * inv_total; }
  double cdf(double x) const {
    if (x <= -0.25) return 0.0;
    if (x >= 0.25) return 1.0;
    const int n = N;
    // derivative knots are kernel values; inline Hermite to reuse them
    double t = (x + 0.25) * (n / 0.5);
    int i = static_cast<int>(t);
    if (i >= n) i = n - 1;
    const double s = t - static_cast<double>(i), h = 0.5 / n;
    const double p0 = Phi[static_cast<size_t>(i)], p1 = Phi[static_cast<size_t>(i) + 1];
    const double r0 = -0.25 + h * static_cast<double>(i);
    const double m0 = kernel(r0) * h, m1 = kernel(r0 + h) * h;
    const double s2 = s * s, s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 +
           (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1;
  }
};

StepTable build_step_table() {
  StepTable t;
  const int n = StepTable::N;
  t.Phi.assign(static_cast<size_t>(n) + 1, 0.0);
  const double hs = 0.5 / n;
  for (int i = 0; i < n; ++i) {
    const double mid = -0.25 + hs * (static_cast<double>(i) + 0.5), half = 0.5 * hs;
    double acc = 0.0;
    for (int q = 0; q < 5; ++q) acc += kGlw[q] * StepTable::raw(mid + half * kGlx[q]);
    t.Phi[static_cast<size_t>(i) + 1] = t.Phi[static_cast<size_t>(i)] + half * acc;
  }
  const double total = t.Phi[static_cast<size_t>(n)];
  t.inv_total = 1.0 / total;
  for (auto& v : t.Phi) v *= t.inv_total;

  auto dstep = [&](double x) { return 2.0 * (t.cdf(x - 0.25) - t.cdf(x - 0.75)); };
  t.H.assign(static_cast<size_t>(n) + 1, 0.0);
  const double ht = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const double mid = ht * (static_cast<double>(i) + 0.5), half = 0.5 * ht;
    double acc = 0.0;
    for (int q = 0; q < 5; ++q) acc += kGlw[q] * dstep(mid + half * kGlx[q]);
    t.H[static_cast<size_t>(i) + 1] = t.H[static_cast<size_t>(i)] + half * acc;
  }
  const double scale = 1.0 / t.H[static_cast<size_t>(n)];
  for (auto& v : t.H) v *= scale;
  t.dH.resize(static_cast<size_t>(n) + 1);
  t.ddH.resize(static_cast<size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    const double x = ht * static_cast<double>(i);
    t.dH[static_cast<size_t>(i)] = dstep(x) * scale;
    t.ddH[static_cast<size_t>(i)] =
        2.0 * (t.kernel(x - 0.25) - t.kernel(x - 0.75)) * scale;
  }
  return t;
}

const StepTable& step_table() {
  static const StepTable t = build_step_table();
  return t;
}

}  // namespace

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const StepTable& tab = step_table();
  const double v = hermite_eval(tab.H, tab.dH, 0.0, static_cast<double>(StepTable::N), t);
  return std::min(1.0, std::max(0.0, v));
}

double smooth_step_deriv(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const StepTable& tab = step_table();
  return hermite_eval(tab.dH, tab.ddH, 0.0, static_cast<double>(StepTable::N), t);
}

double CapParams::beta() const {
  const double g = gamma();
  const double num = 1.0 - eps_param * (eta_param + g) +
                     0.5 * eps_param * eps_param * ramp_slope();
  return num / (1.0 - 2.0 * eps_param);
}

void check_params(const CapParams& p) {
  if (!(p.R > 1.0)) throw ParamsInfeasible("R > 1 violated: R = " + std::to_string(p.R));
  const double g = p.gamma();
  if (!(p.eta_param > 2.0 - g))
    throw ParamsInfeasible("eta_param > 2 - gamma violated: eta_param = " +
                           std::to_string(p.eta_param) + ", 2 - gamma = " +
                           std::to_string(2.0 - g));
  if (!(p.eta_param < 1.0))
    throw ParamsInfeasible("eta_param < 1 violated: eta_param = " +
                           std::to_string(p.eta_param));
  if (!(p.eps_param > 0.0 && p.eps_param < 0.25))
    throw ParamsInfeasible("0 < eps_param < 1/4 violated: eps_param = " +
                           std::to_string(p.eps_param));
  const double s = p.ramp_slope();
  const double num = 1.0 - p.eps_param * (p.eta_param + g) +
                     0.5 * p.eps_param * p.eps_param * s;
  if (!(num > 0.0))
    throw ParamsInfeasible("1 - eps(eta + gamma) + eps^2 slope / 2 > 0 violated: " +
                           std::to_string(num));
  const double cap = (1.0 - 2.0 * p.eps_param) /
                     std::sqrt(1.0 - (p.eps_param / p.R) * (p.eps_param / p.R));
  if (!(num <= cap))
    throw ParamsInfeasible("beta chain violated: numerator " + std::to_string(num) +
                           " > " + std::to_string(cap));
  if (!(p.beta() < 1.0))
    throw ParamsInfeasible("beta < 1 violated: beta = " + std::to_string(p.beta()));
  if (!(g - p.eps_param * s > 1.0))
    throw ParamsInfeasible("outer derivative > 1 violated: gamma - eps*slope = " +
                           std::to_string(g - p.eps_param * s));
}

Sym2 cap_metric_at(double R, double x1, double x2) {
  const double denom = R * R - x1 * x1 - x2 * x2;
  if (denom <= 0.0) return sym_identity();  // callers mask to the unit disk
  return sym_identity() + sym_outer(x1, x2) * (1.0 / denom);
}

MetricField cap_metric(double R, GridPtr grid) {
  if (!(R > 1.0)) throw SingularMetric("cap metric needs R > 1, got " + std::to_string(R));
  MetricField m(grid);
  for (int idx = 0; idx < grid->size(); ++idx) {
    const double x1 = grid->x1_of(idx), x2 = grid->x2_of(idx);
    if (grid->masked(idx) && R * R - x1 * x1 - x2 * x2 <= 1e-12)
      throw SingularMetric("cap metric singular inside the disk at radius " +
                           std::to_string(grid->radius_of(idx)));
    m.set(idx, cap_metric_at(R, x1, x2));
  }
  return m;
}

double RadialProfile::value(double r) const {
  const int n = static_cast<int>(phi_tab.size()) - 1;
  double t = r * inv_dr;
  if (t <= 0.0) return 0.0;
  if (t >= static_cast<double>(n)) t = static_cast<double>(n);
  int i = static_cast<int>(t);
  if (i >= n) i = n - 1;
  const double s = t - static_cast<double>(i);
  const double dr = 1.0 / inv_dr;
  const double p0 = phi_tab[static_cast<size_t>(i)], p1 = phi_tab[static_cast<size_t>(i) + 1];
  const double m0 = dphi_tab[static_cast<size_t>(i)] * dr,
               m1 = dphi_tab[static_cast<size_t>(i) + 1] * dr;
  const double s2 = s * s, s3 = s2 * s;
  return (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 +
         (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1;
}

RadialProfile build_phi(const CapParams& p) {
  check_params(p);
  const double g = p.gamma();
  const double slope = p.ramp_slope();
  const double eta = p.eta_param, eps = p.eps_param, bet = p.beta();
  const double w = eps / 4.0;  // blend half-width at each corner

  auto dphi0 = [=](double r) {
    const double s1 = smooth_step((r - (eps - w)) / (2.0 * w));
    const double s2 = smooth_step((r - (1.0 - eps - w)) / (2.0 * w));
    const double inner = eta * (1.0 - s1) + bet * s1;
    const double ramp = g - slope * (1.0 - r);
    return inner * (1.0 - s2) + ramp * s2;
  };
  // unit-mass correction bump, supported where dphi0 is the constant beta
  auto bump_raw = [](double r) {
    const double t = (r - 0.5) / 0.2;
    return std::fabs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0;
  };

  RadialProfile prof;
  prof.r_max = 1.5;
  prof.inv_dr = 32000.0;
  const int n = 48000;  // knots at i / inv_dr, r = 1 lands on knot 32000
  prof.phi_tab.assign(static_cast<size_t>(n) + 1, 0.0);
  std::vector<double> cum_bump(static_cast<size_t>(n) + 1, 0.0);

  // cumulative integrals by per-cell 5-point Gauss-Legendre
  static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                               0.5384693101056831, 0.9061798459386640};
  static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                               0.4786286704993665, 0.2369268850561891};
  const double dr = 1.0 / prof.inv_dr;
  for (int i = 0; i < n; ++i) {
    const double a = static_cast<double>(i) * dr;
    const double mid = a + 0.5 * dr, half = 0.5 * dr;
    double s0 = 0.0, sb = 0.0;
    for (int q = 0; q < 5; ++q) {
      const double r = mid + half * gx[q];
      s0 += gw[q] * dphi0(r);
      sb += gw[q] * bump_raw(r);
    }
    prof.phi_tab[static_cast<size_t>(i) + 1] = prof.phi_tab[static_cast<size_t>(i)] + half * s0;
    cum_bump[static_cast<size_t>(i) + 1] = cum_bump[static_cast<size_t>(i)] + half * sb;
  }

  const int knot1 = 32000;
  const double defect = 1.0 - prof.phi_tab[knot1];
  const double bump_mass = cum_bump[knot1];
  const double corr = defect / bump_mass;
  for (int i = 0; i <= n; ++i)
    prof.phi_tab[static_cast<size_t>(i)] += corr * cum_bump[static_cast<size_t>(i)];

  prof.dphi = [dphi0, bump_raw, corr](double r) { return dphi0(r) + corr * bump_raw(r); };
  prof.dphi_tab.resize(static_cast<size_t>(n) + 1);
  for (int i = 0; i <= n; ++i)
    prof.dphi_tab[static_cast<size_t>(i)] = prof.dphi(static_cast<double>(i) * dr);

  // shortness of the smoothed profile on a radial scan
  const int scan = 10000;
  for (int i = 1; i < scan; ++i) {
    const double r = static_cast<double>(i) / scan;
    const double radial = p.R * p.R / (p.R * p.R - r * r) - prof.deriv(r) * prof.deriv(r);
    const double angular = r * r - prof.value(r) * prof.value(r);
    if (radial <= 0.0 || angular <= 0.0)
      throw ParamsInfeasible("shortness scan failed at r = " + std::to_string(r) +
                             " (radial margin " + std::to_string(radial) +
                             ", angular margin " + std::to_string(angular) + ")");
  }
  return prof;
}

AnalyticMap short_map(const CapParams& p, std::shared_ptr<const RadialProfile> prof,
                      int dim) {
  AnalyticMap m;
  m.dim = dim;
  const double eta = p.eta_param;
  m.value = [prof, eta, dim](double x1, double x2, double* o) {
    std::fill(o, o + dim, 0.0);
    const double r = std::hypot(x1, x2);
    const double f = r < 1e-9 ? eta : prof->value(r) / r;
    o[0] = f * x1;
    o[1] = f * x2;
  };
  m.jacobian = [prof, eta, dim](double x1, double x2, double* o) {
    std::fill(o, o + dim * 2, 0.0);
    const double r = std::hypot(x1, x2);
    if (r < 1e-9) {
      o[0] = eta;
      o[3] = eta;
      return;
    }
    const double f = prof->value(r) / r;
    const double c = (prof->deriv(r) - f) / (r * r);
    o[0] = f + c * x1 * x1;
    o[1] = c * x1 * x2;
    o[2] = c * x2 * x1;
    o[3] = f + c * x2 * x2;
  };
  return m;
}

JetField build_short_map(const CapParams& p, GridPtr grid) {
  auto prof = std::make_shared<const RadialProfile>(build_phi(p));
  return sample(short_map(p, prof), grid);
}

double boundary_gap(const CapParams& p, double r) {
  return 2.0 * (p.gamma() - 1.0) * (1.0 - r);
}

ScalarField build_h(const CapParams& p, GridPtr grid) {
  ScalarField f(grid);
  for (int idx = 0; idx < grid->size(); ++idx)
    f.at(idx) = boundary_gap(p, grid->radius_of(idx));
  return f;
}

double CutoffProfile::value(double r) const {
  return smooth_step((1.0 - R * delta - r) / delta);
}

double CutoffProfile::deriv(double r) const {
  return -smooth_step_deriv((1.0 - R * delta - r) / delta) / delta;
}

CutoffProfile cutoff_profile(double delta, double R) { return CutoffProfile{delta, R}; }

ScalarField build_cutoff(double delta, double R, GridPtr grid) {
  if (!(delta > 0.0) || (R + 1.0) * delta >= 1.0)
    throw Unresolvable("cutoff plateau empty: (R+1)*delta = " +
                       std::to_string((R + 1.0) * delta) + " >= 1");
  if (delta < 8.0 * grid->spacing)
    throw Unresolvable("cutoff band spans " + std::to_string(delta / grid->spacing) +
                       " cells, need >= 8");
  const CutoffProfile c = cutoff_profile(delta, R);
  ScalarField f(grid);
  for (int idx = 0; idx < grid->size(); ++idx) f.at(idx) = c.value(grid->radius_of(idx));
  return f;
}

CapHypothesisMargins check_cap_hypotheses(const CapParams& p, const RadialProfile& prof,
                                          double sigma0_bar, int scan_points) {
  CapHypothesisMargins m;
  m.shortness = 1e300;
  m.lower = 1e300;
  m.upper = 1e300;
  const double R2 = p.R * p.R;
  for (int i = 1; i < scan_points; ++i) {
    const double r = static_cast<double>(i) / scan_points;
    const double radial = R2 / (R2 - r * r) - prof.deriv(r) * prof.deriv(r);
    const double angular = 1.0 - (prof.value(r) / r) * (prof.value(r) / r);
    m.shortness = std::min(m.shortness, std::min(radial, angular));
  }
  // two-sided sandwich against h on the outer annulus 1 - r in [1e-3, 1e-2]
  for (int i = 0; i <= scan_points; ++i) {
    const double d = 1e-3 + (1e-2 - 1e-3) * static_cast<double>(i) / scan_points;
    const double r = 1.0 - d;
    const double h = boundary_gap(p, r);
    const double radial = R2 / (R2 - r * r) - prof.deriv(r) * prof.deriv(r);
    const double angular = 1.0 - (prof.value(r) / r) * (prof.value(r) / r);
    m.lower = std::min(m.lower, std::min(radial, angular) - (1.0 - sigma0_bar) * h);
    m.upper = std::min(m.upper, (1.0 + sigma0_bar) * h - std::max(radial, angular));
  }
  return m;
}

}  // namespace capflex
