#include "capflex/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "capflex/capgeom.hpp"
#include "capflex/decomp.hpp"
#include "capflex/errors.hpp"
#include "capflex/holder.hpp"
#include "wave_detail.hpp"

namespace capflex {

namespace {

using detail::kDim;
using detail::pullback_at;
using detail::FrameRows;
using detail::NodeCtx;
using detail::build_node_ctx;

constexpr int kWDim = 6;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string node_loc(const Grid& g, int idx) {
  return "node " + std::to_string(idx) + " at (" + std::to_string(g.x1_of(idx)) + ", " +
         std::to_string(g.x2_of(idx)) + ")";
}

// rational blends carrying the collar gap field through the cutoff band with
// relative budget sigma0_tilde*(2+eta)
double phi_collar(double x, double s0) {
  const double s2 = s0 * s0;
  return (1.0 - 2.0 * s2 * (2.0 + x)) / (1.0 - s2 * (2.0 + x) * (2.0 + x)) *
         (1.0 - x * x);
}

double psi_collar(double x, double s0) {
  const double s2 = s0 * s0;
  return x * x / (2.0 - 2.0 * s2 * (2.0 + x) * (2.0 + x));
}

// linear interpolation in a uniform radial table
double table_at(const std::vector<double>& tab, double dr, double r) {
  if (r <= 0.0) return tab.front();
  const double t = r / dr;
  const int i = static_cast<int>(t);
  if (i + 1 >= static_cast<int>(tab.size())) return tab.back();
  const double f = t - i;
  return tab[i] * (1.0 - f) + tab[i + 1] * f;
}

}  // namespace

AnalyticMap anisotropy_flattener(GridPtr grid, const JetField& u, const MetricField& g) {
  // radial eigenvalue profiles of g - u#e sampled along the +x1 axis, where
  // the radial direction is (1,0): A = D_11, B = D_22
  const int n = grid->n;
  const int iyc = (n - 1) / 2, ixc = (n - 1) / 2;
  auto tabA = std::make_shared<std::vector<double>>();
  auto tabB = std::make_shared<std::vector<double>>();
  for (int i = 0; ixc + i < n; ++i) {
    const int idx = iyc * n + (ixc + i);
    if (!grid->masked(idx)) break;
    const Sym2 D = g.at(idx) - pullback_at(u, idx);
    tabA->push_back(D.a11);
    tabB->push_back(D.a22);
  }
  const double dr = grid->spacing;

  // annular windows where the default cap's anisotropy has a definite sign
  // wide tapers keep the (amp'/k)^2 pullback correction small against the
  // retained gap; the radial window must still vanish before the collar
  auto win_rad = [](double r) {
    return smooth_step((r - 0.53) / 0.10) * smooth_step((0.86 - r) / 0.08);
  };
  auto win_ang = [](double r) {
    return smooth_step((r - 0.225) / 0.045) * smooth_step((0.50 - r) / 0.10);
  };
  auto amp_rad = [=](double r) {
    const double w = win_rad(r);
    if (w <= 0.0) return 0.0;
    const double d = table_at(*tabA, dr, r) - table_at(*tabB, dr, r);
    return std::sqrt(std::max(w * d, 0.0));
  };
  auto amp_ang = [=](double r) {
    const double w = win_ang(r);
    if (w <= 0.0) return 0.0;
    const double d = table_at(*tabB, dr, r) - table_at(*tabA, dr, r);
    return r * std::sqrt(std::max(w * d, 0.0));
  };

  const double kRad = 64.0, kAng = 32.0;
  AnalyticMap m;
  m.dim = kDim;
  m.value = [=](double x1, double x2, double* out) {
    std::fill(out, out + kDim, 0.0);
    const double r = std::hypot(x1, x2);
    if (r < 1e-12) return;
    const double ar = amp_rad(r);
    if (ar > 0.0) {
      out[2] = ar / kRad * std::sin(kRad * r);
      out[5] = ar / kRad * std::cos(kRad * r);
    }
    const double aa = amp_ang(r);
    if (aa > 0.0) {
      const double th = std::atan2(x2, x1);
      out[3] = aa / kAng * std::sin(kAng * th);
      out[6] = aa / kAng * std::cos(kAng * th);
    }
  };
  m.jacobian = [=](double x1, double x2, double* out) {
    std::fill(out, out + kDim * 2, 0.0);
    const double r = std::hypot(x1, x2);
    if (r < 1e-12) return;
    const double rh[2] = {x1 / r, x2 / r};
    const double ar = amp_rad(r);
    if (ar > 0.0) {
      const double dar = (amp_rad(r + 1e-6) - amp_rad(r - 1e-6)) / 2e-6;
      const double s = std::sin(kRad * r), c = std::cos(kRad * r);
      for (int k = 0; k < 2; ++k) {
        out[2 * 2 + k] = (dar / kRad * s + ar * c) * rh[k];
        out[5 * 2 + k] = (dar / kRad * c - ar * s) * rh[k];
      }
    }
    const double aa = amp_ang(r);
    if (aa > 0.0) {
      const double daa = (amp_ang(r + 1e-6) - amp_ang(r - 1e-6)) / 2e-6;
      const double th = std::atan2(x2, x1);
      const double s = std::sin(kAng * th), c = std::cos(kAng * th);
      const double dth[2] = {-x2 / (r * r), x1 / (r * r)};
      for (int k = 0; k < 2; ++k) {
        out[3 * 2 + k] = daa / kAng * s * rh[k] + aa * c * dth[k];
        out[6 * 2 + k] = daa / kAng * c * rh[k] - aa * s * dth[k];
      }
    }
  };
  return m;
}

FirstApproximation first_approximation(const JetField& u, const ScalarField& h,
                                       const MetricField& g, double sigma0_tilde,
                                       double delta, BootstrapReport* report) {
  GridPtr grid = u.grid;
  const int n = grid->n;
  if (u.dim != kDim) throw ConfigError("first_approximation: map must have dim 8");
  if (!(sigma0_tilde > 0.0 && sigma0_tilde < 0.5))
    throw ConfigError("first_approximation: sigma0_tilde in ]0,1/2[");

  BootstrapReport local;
  BootstrapReport& rep = report ? *report : local;

  ScalarField eta_boot = build_cutoff(delta, 1.0, grid);
  const CutoffProfile prof = cutoff_profile(delta, 1.0);

  // positive-gap scale on the collar ball
  double rho = std::numeric_limits<double>::infinity();
  for (int idx : grid->annulus(0.0, 1.0 - delta))
    rho = std::min(rho, (g.at(idx) - pullback_at(u, idx)).min_eig());
  if (!(rho > 0.0))
    throw DecompNotPositive("gap g - u#e not positive on the collar ball, min eig " +
                            fmt(rho));
  rep.rho = rho;

  // pass 1: cancel the anisotropy with analytic corrugation pairs
  const AnalyticMap corr = anisotropy_flattener(grid, u, g);
  {
    double v[kDim];
    for (int s = 0; s < 2000; ++s) {
      const double r = 1.0 - delta + delta * s / 2000.0;
      corr.value(r, 0.0, v);
      for (int c = 0; c < kDim; ++c)
        if (v[c] != 0.0)
          throw ConfigError("anisotropy window reaches past the collar at r=" + fmt(r));
    }
  }
  JetField u1 = u;
  {
    double val[kDim], jac[kDim * 2];
    for (int idx : grid->masked_nodes()) {
      const double x1 = grid->x1_of(idx), x2 = grid->x2_of(idx);
      corr.value(x1, x2, val);
      corr.jacobian(x1, x2, jac);
      for (int c = 0; c < kDim; ++c) {
        u1.values[static_cast<size_t>(idx) * kDim + c] += val[c];
        for (int k = 0; k < 2; ++k)
          u1.jac[(static_cast<size_t>(idx) * kDim + c) * 2 + k] += jac[c * 2 + k];
      }
    }
  }

  // blended gap field
  ScalarField h_tilde(grid);
  for (int idx = 0; idx < grid->size(); ++idx) {
    const double e = prof.value(grid->radius_of(idx));
    h_tilde.at(idx) =
        phi_collar(e, sigma0_tilde) * h.at(idx) + psi_collar(e, sigma0_tilde) * rho;
  }

  ScalarField ones(grid);
  for (int idx = 0; idx < grid->size(); ++idx) ones.at(idx) = 1.0;

  const PrimitiveBasis basis = primitive_basis();
  const double solve_edge = std::min(1.0 - delta + 2.0 * grid->spacing, 1.0);
  const std::vector<int> nodes = grid->annulus(0.0, solve_edge);
  const std::vector<int> wave_nodes = grid->annulus(0.0, 1.0 - delta);

  // pass 2: isotropic twist, frequency doubled until the identity defect and
  // both sandwich margins are acceptable
  const double lam_cap = std::floor((n - 1) / 4.0);
  // start as high as the grid allows (the twist only improves with frequency)
  double lam = std::min(512.0, lam_cap);
  const double budget = sigma0_tilde * rho;
  JetField u_tilde(grid, kDim);
  for (;;) {
    DecompositionResult dec;
    try {
      FrameRows frames(u1);
      NodeCtx ctx;
      auto problem = [&](int idx) {
        build_node_ctx(u1, frames, ones, ones, prof, basis, lam, idx, ctx);
        NodeProblem np;
        np.tau = g.at(idx) - ctx.vbar_pb - sym_identity() * (0.5 * rho);
        for (int i = 0; i < 3; ++i) np.M[i] = ctx.M[i];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) np.Lam[i][j] = ctx.Lam[i][j];
        return np;
      };
      // coefficients live at the scale of the retained gap rho/2, so the
      // positivity floor must scale with rho as well; the solve only has to
      // land well inside the identity-defect budget, not at stage precision,
      // since the frame corrections make the per-node system inexact
      dec = nonlinear_decompose(grid, nodes, problem, basis, 0.1 * rho, 2.5,
                                0.02 * budget, 50);
    } catch (const Error& e) {
      // a higher frequency shrinks the mollification and frame-twist
      // corrections that push the deficit toward the cone boundary
      if (2.0 * lam <= lam_cap && (dynamic_cast<const SmallnessViolated*>(&e) ||
                                   dynamic_cast<const NewtonDiverged*>(&e))) {
        lam *= 2.0;
        continue;
      }
      if (dynamic_cast<const SmallnessViolated*>(&e)) throw DecompNotPositive(e.what());
      throw;
    }

    u_tilde = u1;
    {
      FrameRows frames(u1);
      NodeCtx ctx;
      for (int idx : wave_nodes) {
        build_node_ctx(u1, frames, ones, ones, prof, basis, lam, idx, ctx);
        double* val = &u_tilde.values[static_cast<size_t>(idx) * kDim];
        double* jac = &u_tilde.jac[static_cast<size_t>(idx) * kDim * 2];
        for (int i = 0; i < 3; ++i) {
          const double cv = dec.c[i].at(idx);
          double gc[2];
          fd_gradient(dec.c[i], idx, gc);
          const double a = ctx.eta * cv;
          const double ga[2] = {cv * ctx.deta[0] + ctx.eta * gc[0],
                                cv * ctx.deta[1] + ctx.eta * gc[1]};
          const double amp = a / lam;
          for (int c = 0; c < kDim; ++c) {
            val[c] += amp * ctx.C[i][c];
            for (int k = 0; k < 2; ++k)
              jac[c * 2 + k] += a * ctx.A[i][c * 2 + k] + amp * ctx.B[i][c * 2 + k] +
                                ctx.C[i][c] * ga[k] / lam;
          }
        }
      }
    }

    // measured identity defect and two-sided bound
    double enorm = 0.0;
    double lo = std::numeric_limits<double>::infinity(), up = lo;
    for (int idx : grid->masked_nodes()) {
      const Sym2 D = g.at(idx) - pullback_at(u_tilde, idx);
      const Sym2 S1 = g.at(idx) - pullback_at(u1, idx);
      const double e = prof.value(grid->radius_of(idx));
      const Sym2 err =
          D - (S1 * (1.0 - e * e) + sym_identity() * (e * e * 0.5 * rho));
      enorm = std::max(enorm, err.frob());
      const double ht = h_tilde.at(idx);
      const double bud = sigma0_tilde * (2.0 + e);
      up = std::min(up, (sym_identity() * ((1.0 + bud) * ht) - D).min_eig());
      lo = std::min(lo, (D - sym_identity() * ((1.0 - bud) * ht)).min_eig());
    }

    rep.lambda_boot = lam;
    rep.twist_error = enorm;
    rep.twist_error_budget = budget;
    rep.sandwich_lower = lo;
    rep.sandwich_upper = up;
    rep.decomp_min_coefficient = dec.min_coefficient;
    rep.decomp_residual = dec.max_residual;
    rep.smallness_measured = dec.smallness_measured;
    if (enorm < budget && lo >= 0.0 && up >= 0.0) break;
    if (2.0 * lam > lam_cap)
      throw FrequencyUnresolvable(
          "twist frequency " + fmt(lam) + " maxed out with defect " + fmt(enorm) +
          " (budget " + fmt(budget) + "), margins " + fmt(lo) + "/" + fmt(up));
    lam *= 2.0;
  }

  double lb = 0.0;
  for (int idx : grid->annulus(0.0, 1.0 - delta)) {
    const double ht = h_tilde.at(idx);
    lb = std::max(lb, std::max(ht / delta, delta / ht));
  }
  rep.lambda_bar = lb;

  FirstApproximation fa;
  fa.u_tilde = std::make_shared<JetField>(std::move(u_tilde));
  fa.u_tilde->analytic_jac = true;
  fa.h_tilde = std::move(h_tilde);
  fa.eta_boot = std::move(eta_boot);
  fa.delta = delta;
  fa.rho = rho;
  fa.lambda_boot = lam;
  return fa;
}

BootstrapState build_w(const FirstApproximation& fa, const MetricField& g,
                       const std::array<double, 6>& x0, double C_hat,
                       const ParameterSchedule& sched, BootstrapReport* report) {
  GridPtr grid = fa.u_tilde->grid;
  const int n = grid->n;
  const double d1 = sched.delta(1);
  const double mu = C_hat / d1;
  if (4.0 * mu > static_cast<double>(n - 1))
    throw NyquistViolated("mu=" + fmt(mu) + " needs n >= " + fmt(4.0 * mu) +
                          ", grid has n=" + std::to_string(n));

  BootstrapReport local;
  BootstrapReport& rep = report ? *report : local;
  rep.mu = mu;

  const ScalarField eta0 = build_cutoff(d1, sched.R, grid);
  const CutoffProfile prof0 = cutoff_profile(d1, sched.R);
  ScalarField sqrt_ht(grid);
  for (int idx = 0; idx < grid->size(); ++idx)
    sqrt_ht.at(idx) = std::sqrt(std::max(fa.h_tilde.at(idx), 0.0));

  const JetField& ut = *fa.u_tilde;
  const PrimitiveBasis basis = primitive_basis();
  const double edge = 1.0 - sched.R * d1;
  const double solve_edge = std::min(edge + 2.0 * grid->spacing, 1.0);

  // linear decomposition of the rescaled remaining deficit
  std::array<ScalarField, 3> c{ScalarField(grid), ScalarField(grid), ScalarField(grid)};
  double smallness = 0.0;
  for (int idx : grid->annulus(0.0, solve_edge)) {
    const double inv_ht = 1.0 / fa.h_tilde.at(idx);
    const Sym2 tau = (g.at(idx) - pullback_at(ut, idx)) * inv_ht -
                     sym_identity() * (d1 * inv_ht);
    smallness = std::max(smallness, (tau - sym_identity()).frob());
    if (smallness >= sched.decomp_radius)
      throw SmallnessViolated("rescaled deficit " + fmt(smallness) +
                              " outside radius " + fmt(sched.decomp_radius) + " at " +
                              node_loc(*grid, idx));
    const auto L = basis.coeffs(tau);
    for (int k = 0; k < 3; ++k) {
      if (L[k] <= 0.0)
        throw SmallnessViolated("nonpositive coefficient " + fmt(L[k]) + " at " +
                                node_loc(*grid, idx));
      c[k].at(idx) = std::sqrt(L[k]);
    }
  }
  rep.w_smallness = smallness;

  auto w = std::make_shared<JetField>(grid, kWDim);
  for (int idx = 0; idx < grid->size(); ++idx)
    for (int k = 0; k < kWDim; ++k)
      w->values[static_cast<size_t>(idx) * kWDim + k] = x0[k];

  double max_amp = 0.0;
  for (int idx : grid->annulus(0.0, edge)) {
    const double r = grid->radius_of(idx);
    const double x1 = grid->x1_of(idx), x2 = grid->x2_of(idx);
    const double e = prof0.value(r);
    const double de = r > 0.0 ? prof0.deriv(r) / r : 0.0;
    const double deta[2] = {de * x1, de * x2};
    const double sh = sqrt_ht.at(idx);
    double dsh[2];
    fd_gradient(sqrt_ht, idx, dsh);
    double* val = &w->values[static_cast<size_t>(idx) * kWDim];
    double* jac = &w->jac[static_cast<size_t>(idx) * kWDim * 2];
    for (int k = 0; k < 3; ++k) {
      const double cv = c[k].at(idx);
      double gc[2];
      fd_gradient(c[k], idx, gc);
      max_amp = std::max(max_amp, sh * cv);
      const double amp = e * sh * cv;
      const double gamp[2] = {cv * (sh * deta[0] + e * dsh[0]) + e * sh * gc[0],
                              cv * (sh * deta[1] + e * dsh[1]) + e * sh * gc[1]};
      const double ph = mu * (basis.nu[k][0] * x1 + basis.nu[k][1] * x2);
      const double s = std::sin(ph), co = std::cos(ph);
      val[k] += amp / mu * s;
      val[3 + k] += amp / mu * co;
      for (int d = 0; d < 2; ++d) {
        jac[k * 2 + d] = amp * co * basis.nu[k][d] + s * gamp[d] / mu;
        jac[(3 + k) * 2 + d] = -amp * s * basis.nu[k][d] + co * gamp[d] / mu;
      }
    }
  }
  w->analytic_jac = true;

  auto g_tilde = std::make_shared<MetricField>(grid);
  for (int idx = 0; idx < grid->size(); ++idx)
    g_tilde->set(idx, g.at(idx) - pullback_at(*w, idx));

  double w_sup = 0.0;
  for (int idx : grid->masked_nodes()) {
    double s = 0.0;
    for (int k = 0; k < kWDim; ++k) {
      const double d = w->values[static_cast<size_t>(idx) * kWDim + k] - x0[k];
      s += d * d;
    }
    w_sup = std::max(w_sup, std::sqrt(s));
  }
  rep.w_sup = w_sup;
  rep.w_sup_bound = 3.0 * max_amp / mu;

  double defect = 0.0;
  for (int idx : grid->annulus(0.0, 1.0 - (sched.R + 1.0) * d1)) {
    const Sym2 d =
        g_tilde->at(idx) - pullback_at(ut, idx) - sym_identity() * d1;
    defect = std::max(defect, d.frob());
  }
  rep.defect_fit_C = defect * mu * mu;

  BootstrapState bs;
  bs.u_tilde = fa.u_tilde;
  bs.h_tilde = fa.h_tilde;
  bs.eta_boot = fa.eta_boot;
  bs.w = w;
  bs.g_tilde = g_tilde;
  bs.x0 = x0;
  bs.delta = fa.delta;
  bs.rho = fa.rho;
  bs.mu = mu;
  return bs;
}

StageState init_stage_state(const BootstrapState& bs, const ParameterSchedule& sched,
                            BootstrapReport* report) {
  GridPtr grid = bs.u_tilde->grid;
  const double d1 = sched.delta(1);
  const double s0 = sched.sigma0;

  BootstrapReport local;
  BootstrapReport& rep = report ? *report : local;

  ScalarField eta0 = build_cutoff(d1, sched.R, grid);
  const CutoffProfile prof0 = cutoff_profile(d1, sched.R);

  // stage-0 gap field from the collar gap field and the target scale delta_1
  ScalarField h0(grid);
  const double s2 = s0 * s0;
  for (int idx = 0; idx < grid->size(); ++idx) {
    const double e = prof0.value(grid->radius_of(idx));
    const double den = 1.0 - s2 * (2.0 + e) * (2.0 + e);
    h0.at(idx) = (1.0 - s2 * (2.0 + e)) / den * (1.0 - e * e) * bs.h_tilde.at(idx) +
                 e * e / den * d1;
  }

  // (21): seminorm growth of the reduced target
  {
    std::array<ScalarField, 3> comp{ScalarField(grid), ScalarField(grid),
                                    ScalarField(grid)};
    for (int idx = 0; idx < grid->size(); ++idx) {
      const Sym2 s = bs.g_tilde->at(idx);
      comp[0].at(idx) = s.a11;
      comp[1].at(idx) = s.a12;
      comp[2].at(idx) = s.a22;
    }
    for (int k = 0; k <= 2; ++k) {
      double m = 0.0;
      for (const auto& f : comp)
        m = std::max(m, holder_seminorm(f, k, 0.0, 4096, 1).value);
      rep.g_seminorm[k] = m;
      const double cap = sched.C0 * (1.0 + std::pow(d1, 1.0 - k));
      if (m > cap)
        throw HypothesisFailed("(21) [g]_" + std::to_string(k) + " = " + fmt(m) +
                               " exceeds " + fmt(cap));
    }
  }

  // (23): linearity outside the working ball, pinching inside
  {
    double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
    for (int idx : grid->masked_nodes()) {
      const double r = grid->radius_of(idx);
      if (r < 1.0 - sched.R * d1 || r >= 1.0 - 1e-12) continue;
      const double slope = h0.at(idx) / (1.0 - r);
      smin = std::min(smin, slope);
      smax = std::max(smax, slope);
    }
    rep.h0_linearity = smax - smin;
    if (smax - smin > 1e-9 * smax)
      throw HypothesisFailed("(23) gap field not linear on the outer annulus, slope spread " +
                             fmt(smax - smin));
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (int idx : grid->annulus(0.0, 1.0 - sched.R * d1)) {
      rmin = std::min(rmin, h0.at(idx) / d1);
      rmax = std::max(rmax, h0.at(idx) / d1);
    }
    rep.h0_min_ratio = rmin;
    rep.h0_max_ratio = rmax;
    if (rmin < 1.0 / sched.Lambda || rmax > sched.Lambda)
      throw HypothesisFailed("(23) gap pinching " + fmt(rmin) + ".." + fmt(rmax) +
                             " outside [1/Lambda, Lambda]");
  }

  // (24): gap field seminorm decay, third order by direct differences
  {
    for (int k = 0; k <= 2; ++k)
      rep.h0_seminorm[k] = holder_seminorm(h0, k, 0.0, 4096, 1).value;
    const int n = grid->n;
    const double inv = 1.0 / (2.0 * std::pow(grid->spacing, 3));
    double m3 = 0.0;
    for (int idx : grid->masked_nodes()) {
      const int ix = grid->ix_of(idx), iy = grid->iy_of(idx);
      if (ix >= 2 && ix + 2 < n && grid->masked(idx - 2) && grid->masked(idx - 1) &&
          grid->masked(idx + 1) && grid->masked(idx + 2))
        m3 = std::max(m3, std::fabs((h0.at(idx + 2) - 2.0 * h0.at(idx + 1) +
                                     2.0 * h0.at(idx - 1) - h0.at(idx - 2)) *
                                    inv));
      if (iy >= 2 && iy + 2 < n && grid->masked(idx - 2 * n) && grid->masked(idx - n) &&
          grid->masked(idx + n) && grid->masked(idx + 2 * n))
        m3 = std::max(m3, std::fabs((h0.at(idx + 2 * n) - 2.0 * h0.at(idx + n) +
                                     2.0 * h0.at(idx - n) - h0.at(idx - 2 * n)) *
                                    inv));
    }
    rep.h0_seminorm[3] = m3;
    for (int k = 0; k <= 3; ++k) {
      const double cap = sched.C0 * std::pow(d1, 1.0 - k);
      if (rep.h0_seminorm[k] > cap)
        throw HypothesisFailed("(24) [h]_" + std::to_string(k) + " = " +
                               fmt(rep.h0_seminorm[k]) + " exceeds " + fmt(cap));
    }
  }

  // (22): v_0 = u_tilde by construction; the codimension map must be frozen
  // at x0 on the rim
  {
    double rv = 0.0, rj = 0.0;
    for (int idx : grid->rim_nodes()) {
      for (int k = 0; k < kWDim; ++k) {
        rv = std::max(rv, std::fabs(bs.w->values[static_cast<size_t>(idx) * kWDim + k] -
                                    bs.x0[k]));
        for (int d = 0; d < 2; ++d)
          rj = std::max(rj,
                        std::fabs(bs.w->jac[(static_cast<size_t>(idx) * kWDim + k) * 2 + d]));
      }
    }
    rep.rim_value_gap = rv;
    rep.rim_jacobian_gap = rj;
    if (rv > 1e-12 || rj > 1e-12)
      throw HypothesisFailed("(22) codimension map not frozen on the rim, gaps " +
                             fmt(rv) + "/" + fmt(rj));
  }

  // (25): two-sided deficit bound at stage 0
  {
    double lo = std::numeric_limits<double>::infinity(), up = lo;
    for (int idx : grid->masked_nodes()) {
      const Sym2 D = bs.g_tilde->at(idx) - pullback_at(*bs.u_tilde, idx);
      const double hh = h0.at(idx);
      const double bud = s0 * (1.0 + eta0.at(idx));
      up = std::min(up, (sym_identity() * ((1.0 + bud) * hh) - D).min_eig());
      lo = std::min(lo, (D - sym_identity() * ((1.0 - bud) * hh)).min_eig());
    }
    rep.hyp25_lower = lo;
    rep.hyp25_upper = up;
    if (lo < 0.0 || up < 0.0)
      throw HypothesisFailed("(25) stage-0 sandwich margins " + fmt(lo) + "/" + fmt(up));
  }

  StageState st;
  st.q = 0;
  st.sched = sched;
  st.u_anchor = bs.u_tilde;
  st.g_target = bs.g_tilde;
  st.v = bs.u_tilde;
  st.h = std::move(h0);
  st.eta = std::move(eta0);
  return st;
}

std::string BootstrapReport::to_json() const {
  std::string s = "{";
  auto add = [&s](const char* key, const std::string& val, bool last = false) {
    s += "\"";
    s += key;
    s += "\": " + val + (last ? "" : ", ");
  };
  add("rho", fmt(rho));
  add("lambda_boot", fmt(lambda_boot));
  add("twist_error", fmt(twist_error));
  add("twist_error_budget", fmt(twist_error_budget));
  add("sandwich_lower", fmt(sandwich_lower));
  add("sandwich_upper", fmt(sandwich_upper));
  add("decomp_min_coefficient", fmt(decomp_min_coefficient));
  add("decomp_residual", fmt(decomp_residual));
  add("smallness_measured", fmt(smallness_measured));
  add("lambda_bar", fmt(lambda_bar));
  add("mu", fmt(mu));
  add("w_sup", fmt(w_sup));
  add("w_sup_bound", fmt(w_sup_bound));
  add("w_smallness", fmt(w_smallness));
  add("defect_fit_C", fmt(defect_fit_C));
  for (int k = 0; k <= 2; ++k)
    add(("g_seminorm_" + std::to_string(k)).c_str(), fmt(g_seminorm[k]));
  for (int k = 0; k <= 3; ++k)
    add(("h0_seminorm_" + std::to_string(k)).c_str(), fmt(h0_seminorm[k]));
  add("h0_min_ratio", fmt(h0_min_ratio));
  add("h0_max_ratio", fmt(h0_max_ratio));
  add("h0_linearity", fmt(h0_linearity));
  add("hyp25_lower", fmt(hyp25_lower));
  add("hyp25_upper", fmt(hyp25_upper));
  add("rim_value_gap", fmt(rim_value_gap));
  add("rim_jacobian_gap", fmt(rim_jacobian_gap), true);
  s += "}";
  return s;
}

}  // namespace capflex
