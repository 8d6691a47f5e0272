#include "capflex/stage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "capflex/capgeom.hpp"
#include "capflex/errors.hpp"
#include "capflex/holder.hpp"
#include "capflex/mollify.hpp"
#include "capflex/normals.hpp"
#include "wave_detail.hpp"

namespace capflex {

namespace {

using detail::kDim;
using detail::kNormals;
using detail::sym_tt;
using detail::mat_t_vec;
using detail::sym_ug;
using detail::pullback_at;
using detail::FrameRows;
using detail::NodeCtx;
using detail::build_node_ctx;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void hierarchy_fail(const std::string& ineq, int q) {
  throw HierarchyViolated(ineq + " fails at q=" + std::to_string(q));
}

double phi_blend(double x, double s0) {
  const double s2 = s0 * s0;
  return (1.0 - s2 * (1.0 + x)) / (1.0 - s2 * (1.0 + x) * (1.0 + x)) * (1.0 - x * x);
}

double psi_blend(double x, double s0) {
  const double s2 = s0 * s0;
  return x * x / (1.0 - s2 * (1.0 + x) * (1.0 + x));
}

}  // namespace

ParameterSchedule make_schedule(double a_base, double b, double c,
                                const ParameterSchedule& constants) {
  if (!(a_base > 1.0)) throw HierarchyViolated("a_base > 1 fails");
  if (!(b > 1.0 && c > b))
    throw HierarchyViolated("c > b > 1 fails: b=" + fmt(b) + ", c=" + fmt(c));
  if (!(constants.sigma0 > 0.0 && constants.sigma0 < 0.5))
    throw HierarchyViolated("sigma0 in ]0,1/2[ fails: " + fmt(constants.sigma0));
  if (!(constants.R >= 1.0 && constants.Lambda >= 1.0 && constants.C0 >= 1.0))
    throw HierarchyViolated("constants R, Lambda, C0 >= 1 fail");
  ParameterSchedule s = constants;
  s.a_base = a_base;
  s.b = b;
  s.c = c;
  for (int q = 0; q <= s.Q; ++q) {
    const double d1 = s.delta(q + 1), d2 = s.delta(q + 2);
    const double l = s.ell(q), lam1 = s.lambda(q + 1);
    if (!(1.0 / d1 <= 1.0 / d2))
      hierarchy_fail("delta_{q+1}^{-1} <= delta_{q+2}^{-1}", q);
    if (!(1.0 / d2 <= 1.0 / l)) hierarchy_fail("delta_{q+2}^{-1} <= ell_q^{-1}", q);
    if (!(1.0 / l <= lam1)) hierarchy_fail("ell_q^{-1} <= lambda_{q+1}", q);
    if (!(s.C_hat * d1 / (l * l * lam1 * lam1) <= d2))
      hierarchy_fail("C_hat delta_{q+1} / (ell_q^2 lambda_{q+1}^2) <= delta_{q+2}", q);
  }
  return s;
}

StageState run_stage(const StageState& state, StageReport* report) {
  const ParameterSchedule& S = state.sched;
  const int q = state.q;
  GridPtr grid = state.v->grid;
  const int n = grid->n;
  const double d1 = S.delta(q + 1), d2 = S.delta(q + 2);
  const double lam = S.lambda(q + 1), ell = S.ell(q);
  const double inv_lam = 1.0 / lam;

  if (4.0 * lam > static_cast<double>(n - 1))
    throw NyquistViolated("lambda_{q+1}=" + fmt(lam) + " needs n >= " +
                          fmt(4.0 * lam) + ", grid has n=" + std::to_string(n));
  // the waves must vanish before the mollification halo of the previous stage
  if (!(S.R * (d1 - d2) >= ell))
    throw HierarchyViolated("R(delta_{q+1}-delta_{q+2}) >= ell_q fails at q=" +
                            std::to_string(q));

  const double edge = 1.0 - S.R * d2;
  for (int idx : grid->annulus(0.0, edge))
    if (state.h.at(idx) < 1e-14)
      throw SingularMetric("gap field underflow " + fmt(state.h.at(idx)) +
                           " inside the working ball");

  StageReport local;
  StageReport& rep = report ? *report : local;
  rep.q = q;
  rep.delta_next = d1;
  rep.lambda_next = lam;
  rep.ell = ell;

  // cutoff at the new band
  ScalarField eta_next = build_cutoff(d2, S.R, grid);
  const CutoffProfile etaprof = cutoff_profile(d2, S.R);

  // mollify around the anchor to keep the boundary jet exact
  const JetField& u = *state.u_anchor;
  JetField vbar(grid, kDim);
  {
    const JetField& v = *state.v;
    for (size_t t = 0; t < vbar.values.size(); ++t)
      vbar.values[t] = v.values[t] - u.values[t];
    for (size_t t = 0; t < vbar.jac.size(); ++t) vbar.jac[t] = v.jac[t] - u.jac[t];
    const Kernel ker = make_kernel(ell, grid->spacing);
    vbar = convolve(vbar, ker);
    for (size_t t = 0; t < vbar.values.size(); ++t) vbar.values[t] += u.values[t];
    for (size_t t = 0; t < vbar.jac.size(); ++t) vbar.jac[t] += u.jac[t];
    vbar.analytic_jac = v.analytic_jac;
    // outside the mollification halo the map still equals the anchor; snap
    // away FFT roundoff so the boundary jet stays bitwise exact
    const double halo = 1.0 - S.R * d1 + (ker.radius + 1) * grid->spacing;
    for (int idx : grid->masked_nodes()) {
      if (grid->radius_of(idx) < halo) continue;
      for (int c = 0; c < kDim; ++c) {
        vbar.values[static_cast<size_t>(idx) * kDim + c] =
            u.values[static_cast<size_t>(idx) * kDim + c];
        for (int k = 0; k < 2; ++k)
          vbar.jac[(static_cast<size_t>(idx) * kDim + c) * 2 + k] =
              u.jac[(static_cast<size_t>(idx) * kDim + c) * 2 + k];
      }
    }
  }

  ScalarField sqrt_h(grid);
  for (int idx = 0; idx < grid->size(); ++idx)
    sqrt_h.at(idx) = std::sqrt(std::max(state.h.at(idx), 0.0));

  const PrimitiveBasis basis = primitive_basis();
  const MetricField& gt = *state.g_target;

  // decomposition, extended two cells past the wave support so the
  // coefficient gradients are clean wherever the cutoff is nonzero
  const double solve_edge = std::min(edge + 2.0 * grid->spacing, 1.0);
  std::vector<int> nodes = grid->annulus(0.0, solve_edge);
  DecompositionResult dec;
  {
    FrameRows frames(vbar);
    NodeCtx ctx;
    auto problem = [&](int idx) {
      build_node_ctx(vbar, frames, state.h, sqrt_h, etaprof, basis, lam, idx, ctx);
      NodeProblem np;
      const double inv_h = 1.0 / ctx.h;
      np.tau = (gt.at(idx) - ctx.vbar_pb) * inv_h - sym_identity() * (d2 * inv_h);
      for (int i = 0; i < 3; ++i) np.M[i] = ctx.M[i];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) np.Lam[i][j] = ctx.Lam[i][j];
      return np;
    };
    dec = nonlinear_decompose(grid, nodes, problem, basis, S.r0, S.decomp_radius);
  }
  rep.decomp_residual = dec.max_residual;
  rep.decomp_min_coefficient = dec.min_coefficient;
  rep.decomp_max_newton_iters = dec.max_newton_iters;
  rep.smallness_measured = dec.smallness_measured;
  {
    std::vector<int> iters;
    iters.reserve(nodes.size());
    for (int idx : nodes) iters.push_back(dec.newton_iters[static_cast<size_t>(idx)]);
    std::nth_element(iters.begin(), iters.begin() + iters.size() / 2, iters.end());
    rep.decomp_median_newton_iters = iters[iters.size() / 2];
  }

  // assembly: overwrite the mollified map in place, streaming the frame rows
  // ahead of the write front and checking the pullback identity per node
  double ansatz_max = 0.0, orth_max = 0.0, tang_max = 0.0;
  {
    FrameRows frames(vbar);
    NodeCtx ctx;
    for (int idx : grid->annulus(0.0, edge)) {
      build_node_ctx(vbar, frames, state.h, sqrt_h, etaprof, basis, lam, idx, ctx);
      orth_max = std::max(orth_max, ctx.frame_orth);
      tang_max = std::max(tang_max, ctx.frame_tang);

      double cval[3], gc[3][2], a[3], ga[3][2];
      for (int i = 0; i < 3; ++i) {
        cval[i] = dec.c[i].at(idx);
        fd_gradient(dec.c[i], idx, gc[i]);
        a[i] = ctx.eta * ctx.sqrt_h * cval[i];
        for (int k = 0; k < 2; ++k)
          ga[i][k] = cval[i] * (ctx.sqrt_h * ctx.deta[k] + ctx.eta * ctx.dsqrt_h[k]) +
                     ctx.eta * ctx.sqrt_h * gc[i][k];
      }

      double* val = &vbar.values[static_cast<size_t>(idx) * kDim];
      double* jac = &vbar.jac[static_cast<size_t>(idx) * kDim * 2];
      for (int i = 0; i < 3; ++i) {
        const double amp = a[i] * inv_lam;
        for (int c = 0; c < kDim; ++c) {
          val[c] += amp * ctx.C[i][c];
          for (int k = 0; k < 2; ++k)
            jac[c * 2 + k] += a[i] * ctx.A[i][c * 2 + k] +
                              amp * ctx.B[i][c * 2 + k] +
                              inv_lam * ctx.C[i][c] * ga[i][k];
        }
      }

      // nodewise identity: new pullback against the closed-form update
      const double e2h = ctx.eta * ctx.eta * ctx.h;
      Sym2 rhs = ctx.vbar_pb;
      for (int i = 0; i < 3; ++i) {
        rhs += basis.primitive(i) * (e2h * cval[i] * cval[i]);
        rhs += ctx.M[i] * (e2h * cval[i]);
        for (int j = 0; j < 3; ++j)
          rhs += ctx.Lam[i][j] * (e2h * cval[i] * cval[j]);
      }
      const double inv_lam2 = inv_lam * inv_lam;
      Sym2 E1{};
      for (int i = 0; i < 3; ++i) {
        double bc[2];
        for (int j = 0; j < 3; ++j) {
          mat_t_vec(ctx.B[i], ctx.C[j], bc);
          E1 += sym_ug(bc, gc[j]) * (2.0 * e2h * cval[i] * inv_lam2);
        }
        double dhe[2] = {ctx.sqrt_h * ctx.deta[0] + ctx.eta * ctx.dsqrt_h[0],
                         ctx.sqrt_h * ctx.deta[1] + ctx.eta * ctx.dsqrt_h[1]};
        E1 += sym_ug(dhe, gc[i]) * (2.0 * ctx.eta * ctx.sqrt_h * cval[i] * inv_lam2);
        E1 += sym_outer(gc[i][0], gc[i][1]) * (e2h * inv_lam2);
      }
      Sym2 E2{};
      {
        const double pre = ctx.eta * (1.0 - ctx.eta) * ctx.h;
        for (int i = 0; i < 3; ++i) {
          E2 += ctx.M[i] * (pre * cval[i]);
          E2 += sym_ug(ctx.deta, ctx.dsqrt_h) *
                (2.0 * pre * cval[i] * cval[i] * inv_lam2 / ctx.sqrt_h);
          double bc[2];
          for (int j = 0; j < 3; ++j) {
            mat_t_vec(ctx.B[i], ctx.C[j], bc);
            E2 += sym_ug(bc, ctx.deta) * (2.0 * pre * cval[i] * cval[j] * inv_lam2);
          }
          E2 += sym_outer(ctx.deta[0], ctx.deta[1]) *
                ((1.0 - ctx.eta * ctx.eta) * ctx.h * cval[i] * cval[i] * inv_lam2);
        }
      }
      rhs += E1 + E2;
      const Sym2 lhs = pullback_at(vbar, idx);
      ansatz_max = std::max(ansatz_max, (lhs - rhs).max_abs());
    }
  }
  rep.ansatz_residual = ansatz_max;
  rep.frame_orthonormality = orth_max;
  rep.frame_tangency = tang_max;

  // gap update
  ScalarField h_next(grid);
  for (int idx = 0; idx < grid->size(); ++idx) {
    const double e = etaprof.value(grid->radius_of(idx));
    h_next.at(idx) =
        phi_blend(e, S.sigma0) * state.h.at(idx) + psi_blend(e, S.sigma0) * d2;
  }

  StageState next;
  next.q = q + 1;
  next.sched = S;
  next.u_anchor = state.u_anchor;
  next.g_target = state.g_target;
  next.v = std::make_shared<JetField>(std::move(vbar));
  next.h = std::move(h_next);
  next.eta = std::move(eta_next);

  const StageReport ver = verify_stage(state, next);
  rep.sandwich_lower = ver.sandwich_lower;
  rep.sandwich_upper = ver.sandwich_upper;
  rep.increment_c0 = ver.increment_c0;
  rep.increment_c1 = ver.increment_c1;
  rep.measured_C0_c0 = ver.measured_C0_c0;
  rep.measured_C0_c1 = ver.measured_C0_c1;
  rep.h_min_ratio = ver.h_min_ratio;
  rep.h_max_ratio = ver.h_max_ratio;
  rep.rim_value_gap = ver.rim_value_gap;
  rep.rim_jacobian_gap = ver.rim_jacobian_gap;
  rep.v_c2_seminorm = ver.v_c2_seminorm;
  return next;
}

StageReport verify_stage(const StageState& prev, const StageState& next) {
  StageReport r;
  try {
    const ParameterSchedule& S = next.sched;
    r.q = prev.q;
    r.delta_next = S.delta(prev.q + 1);
    r.lambda_next = S.lambda(prev.q + 1);
    r.ell = S.ell(prev.q);

    const Grid& g = *next.v->grid;
    const MetricField& gt = *next.g_target;
    double lo = std::numeric_limits<double>::infinity(), up = lo;
    for (int idx : g.masked_nodes()) {
      const Sym2 D = gt.at(idx) - pullback_at(*next.v, idx);
      const double hh = next.h.at(idx);
      const double bud = S.sigma0 * (1.0 + next.eta.at(idx));
      up = std::min(up, (sym_identity() * ((1.0 + bud) * hh) - D).min_eig());
      lo = std::min(lo, (D - sym_identity() * ((1.0 - bud) * hh)).min_eig());
    }
    r.sandwich_upper = up;
    r.sandwich_lower = lo;

    double c0 = 0.0, c1 = 0.0;
    const JetField& va = *prev.v;
    const JetField& vb = *next.v;
    for (int idx : g.masked_nodes()) {
      double sv = 0.0, sj = 0.0;
      for (int i = 0; i < vb.dim; ++i) {
        const double dv = vb.value(idx, i) - va.value(idx, i);
        sv += dv * dv;
        for (int k = 0; k < 2; ++k) {
          const double dj = vb.dvalue(idx, i, k) - va.dvalue(idx, i, k);
          sj += dj * dj;
        }
      }
      c0 = std::max(c0, std::sqrt(sv));
      c1 = std::max(c1, std::sqrt(sj));
    }
    r.increment_c0 = c0;
    r.increment_c1 = c1;
    const double sqd = std::sqrt(S.delta(prev.q + 1));
    r.measured_C0_c0 = c0 * S.lambda(prev.q + 1) / sqd;
    r.measured_C0_c1 = c1 / sqd;

    const double dn = S.delta(next.q + 1);
    double hmin = std::numeric_limits<double>::infinity(), hmax = 0.0;
    for (int idx : g.annulus(0.0, 1.0 - S.R * dn)) {
      hmin = std::min(hmin, next.h.at(idx) / dn);
      hmax = std::max(hmax, next.h.at(idx) / dn);
    }
    r.h_min_ratio = hmin;
    r.h_max_ratio = hmax;

    const JetField& u = *next.u_anchor;
    double rv = 0.0, rj = 0.0;
    for (int idx : g.rim_nodes()) {
      for (int i = 0; i < vb.dim; ++i) {
        rv = std::max(rv, std::fabs(vb.value(idx, i) - u.value(idx, i)));
        for (int k = 0; k < 2; ++k)
          rj = std::max(rj, std::fabs(vb.dvalue(idx, i, k) - u.dvalue(idx, i, k)));
      }
    }
    r.rim_value_gap = rv;
    r.rim_jacobian_gap = rj;

    r.v_c2_seminorm = holder_seminorm(vb, 2, 0.0, 4096, 1).value;
  } catch (...) {
    // verification reports what it could; unfilled fields stay zero
  }
  return r;
}

std::vector<ConvergenceRow> convergence_table(const std::vector<StageState>& states,
                                              double alpha, int pair_budget,
                                              uint64_t seed) {
  std::vector<ConvergenceRow> out;
  for (size_t t = 0; t + 1 < states.size(); ++t) {
    const JetField& va = *states[t].v;
    const JetField& vb = *states[t + 1].v;
    JetField diff(va.grid, va.dim);
    for (size_t i = 0; i < diff.values.size(); ++i)
      diff.values[i] = vb.values[i] - va.values[i];
    for (size_t i = 0; i < diff.jac.size(); ++i) diff.jac[i] = vb.jac[i] - va.jac[i];

    const double n1 = holder_seminorm(diff, 0, 0.0, pair_budget, seed).value +
                      holder_seminorm(diff, 1, 0.0, pair_budget, seed).value;
    const double s2 = holder_seminorm(diff, 2, 0.0, pair_budget, seed).value;

    ConvergenceRow row;
    const ParameterSchedule& S = states[t].sched;
    row.q = states[t].q;
    row.measured = std::pow(n1, 1.0 - alpha) * std::pow(s2, alpha);
    row.predicted = std::pow(
        S.a_base, -0.5 * std::pow(S.b, states[t].q) * (1.0 - 2.0 * alpha * S.b * S.c));
    row.admissible = alpha < 1.0 / (2.0 * S.b * S.c);
    out.push_back(row);
  }
  return out;
}

std::string StageReport::to_json() const {
  std::string s = "{";
  auto add = [&s](const char* key, const std::string& val, bool last = false) {
    s += "\"";
    s += key;
    s += "\": " + val + (last ? "" : ", ");
  };
  add("q", std::to_string(q));
  add("delta_next", fmt(delta_next));
  add("lambda_next", fmt(lambda_next));
  add("ell", fmt(ell));
  add("sandwich_lower", fmt(sandwich_lower));
  add("sandwich_upper", fmt(sandwich_upper));
  add("increment_c0", fmt(increment_c0));
  add("increment_c1", fmt(increment_c1));
  add("measured_C0_c0", fmt(measured_C0_c0));
  add("measured_C0_c1", fmt(measured_C0_c1));
  add("h_min_ratio", fmt(h_min_ratio));
  add("h_max_ratio", fmt(h_max_ratio));
  add("decomp_residual", fmt(decomp_residual));
  add("decomp_min_coefficient", fmt(decomp_min_coefficient));
  add("decomp_max_newton_iters", std::to_string(decomp_max_newton_iters));
  add("decomp_median_newton_iters", std::to_string(decomp_median_newton_iters));
  add("smallness_measured", fmt(smallness_measured));
  add("frame_orthonormality", fmt(frame_orthonormality));
  add("frame_tangency", fmt(frame_tangency));
  add("ansatz_residual", fmt(ansatz_residual));
  add("rim_value_gap", fmt(rim_value_gap));
  add("rim_jacobian_gap", fmt(rim_jacobian_gap));
  add("v_c2_seminorm", fmt(v_c2_seminorm), true);
  s += "}";
  return s;
}

}  // namespace capflex
