// Radial margin evaluator for the bootstrap + stage-0 sandwich chain with the
// oscillatory error terms idealized to zero.  Used once to pick shipped
// defaults; the pipeline re-measures everything with real error terms.
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "capflex/capgeom.hpp"

using namespace capflex;

struct Params {
  double eta_p = 0.92, eps_p = 0.245;
  double delta = 0.116, sig_t = 0.22, rho = 0.030;
  double sig0 = 0.20, delta1 = 0.01250, delta2 = 0.01003;
  double Rs = 5.0;
};

// min over the three 0/60/120 directions of the decomposition coefficient of
// R(th) diag(A,B) R(th)^T, worst case over the polar angle
static double min_L3_worst(double A, double B) {
  double out = 1e9;
  for (int j = 0; j <= 60; ++j) {
    double th = j * (M_PI / 3.0) / 60.0;
    for (int i = 0; i < 3; ++i) {
      double d = th - i * M_PI / 3.0;
      double c2 = std::cos(d) * std::cos(d);
      out = std::min(out, (A * (4.0 * c2 - 1.0) + B * (3.0 - 4.0 * c2)) / 3.0);
    }
  }
  return out;
}

int main() {
  Params P;
  CapParams cp;
  cp.eta_param = P.eta_p;
  cp.eps_param = P.eps_p;
  RadialProfile prof = build_phi(cp);
  const double lam_h = 2.0 * (cp.gamma() - 1.0);
  auto A_of = [&](double r) {
    double d = prof.deriv(r);
    return 4.0 / (4.0 - r * r) - d * d;
  };
  auto B_of = [&](double r) {
    double p = prof.value(r) / r;
    return 1.0 - p * p;
  };
  // pass-1 radial corrugation window: flattens A toward B over the zone where
  // the 3-direction cone fails, tapering off inside the cutoff band
  auto urad_of = [&](double r) {
    return smooth_step((r - 0.53) / 0.06) * smooth_step((0.81 - r) / 0.05);
  };
  // angular corrugation window over the zone where B exceeds A
  auto uang_of = [&](double r) {
    return smooth_step((r - 0.235) / 0.05) * smooth_step((0.505 - r) / 0.04);
  };
  auto A_eff = [&](double r) {
    return A_of(r) - urad_of(r) * (A_of(r) - B_of(r));
  };
  auto B_eff = [&](double r) {
    return B_of(r) - uang_of(r) * (B_of(r) - A_of(r));
  };
  // bootstrap cutoff eta(r): 1 for r <= 1-2delta, 0 for r >= 1-delta
  auto eta_of = [&](double r) {
    return smooth_step((1.0 - P.delta - r) / P.delta);
  };
  auto Phi = [&](double x) {
    double s2 = P.sig_t * P.sig_t;
    return (1.0 - 2.0 * s2 * (2.0 + x)) / (1.0 - s2 * (2.0 + x) * (2.0 + x)) *
           (1.0 - x * x);
  };
  auto Psi = [&](double x) {
    double s2 = P.sig_t * P.sig_t;
    return x * x / (2.0 - 2.0 * s2 * (2.0 + x) * (2.0 + x));
  };
  auto ht_of = [&](double r) {
    double e = eta_of(r);
    return Phi(e) * lam_h * (1.0 - r) + Psi(e) * P.rho;
  };

  // rho feasibility: min eig of S on the twist ball
  double mineig = 1e9, mineig_r = 0;
  for (int i = 1; i <= 40000; ++i) {
    double r = (1.0 - P.delta) * i / 40000.0;
    double m = std::min(A_of(r), B_of(r));
    if (m < mineig) { mineig = m; mineig_r = r; }
  }
  std::printf("mineig(S) on twist ball = %.4f at r=%.3f (rho=%.4f)\n", mineig,
              mineig_r, P.rho);

  // twist decomposition floor: worst-angle 3-direction coefficient of the
  // pass-2 target S - (rho/2) e with the pass-1 anisotropy removed
  double cone_min = 1e9, cone_r = 0, cone_raw = 1e9, cone_raw_r = 0;
  for (int i = 1; i <= 40000; ++i) {
    double r = (1.0 - P.delta) * i / 40000.0;
    double m = min_L3_worst(A_eff(r) - 0.5 * P.rho, B_eff(r) - 0.5 * P.rho);
    if (m < cone_min) { cone_min = m; cone_r = r; }
    double raw = min_L3_worst(A_of(r) - 0.5 * P.rho, B_of(r) - 0.5 * P.rho);
    if (raw < cone_raw) { cone_raw = raw; cone_raw_r = r; }
  }
  std::printf(
      "twist floor: with pass-1 %.4f at r=%.3f | without pass-1 %.4f at r=%.3f\n",
      cone_min, cone_r, cone_raw, cone_raw_r);

  // (44) margins with E = 0: deficit entries after both passes vs sandwich
  auto defAB = [&](double r, double& dA, double& dB) {
    double e = eta_of(r);
    dA = (1.0 - e * e) * A_eff(r) + e * e * 0.5 * P.rho;
    dB = (1.0 - e * e) * B_eff(r) + e * e * 0.5 * P.rho;
  };
  double up44 = 1e9, lo44 = 1e9, up44_r = 0, lo44_r = 0;
  for (int i = 1; i < 40000; ++i) {
    double r = static_cast<double>(i) / 40000.0;
    double dA, dB;
    defAB(r, dA, dB);
    double ht = ht_of(r);
    double bud = P.sig_t * (2.0 + eta_of(r));
    double up = (1.0 + bud) * ht - std::max(dA, dB);
    double lo = std::min(dA, dB) - (1.0 - bud) * ht;
    // relative to ht so the thin rim does not dominate the report
    if (up / ht < up44) { up44 = up / ht; up44_r = r; }
    if (lo / ht < lo44) { lo44 = lo / ht; lo44_r = r; }
  }
  std::printf("(44) rel margins: upper %.4f at r=%.3f | lower %.4f at r=%.3f\n",
              up44, up44_r, lo44, lo44_r);

  // w-step: tau_w = (S_twisted - delta1 e)/ht on supp eta0 (r <= 1-Rs*delta1),
  // worst-angle 3-direction coefficient
  double Lw_min = 1e9, Lw_r = 0;
  double edge = 1.0 - P.Rs * P.delta1;
  for (int i = 1; i <= 40000; ++i) {
    double r = edge * i / 40000.0;
    double dA, dB;
    defAB(r, dA, dB);
    double ht = ht_of(r);
    double m = min_L3_worst((dA - P.delta1) / ht, (dB - P.delta1) / ht);
    if (m < Lw_min) { Lw_min = m; Lw_r = r; }
  }
  std::printf("w decomposition: worst L_i(tau_w) = %.4f at r=%.3f\n", Lw_min, Lw_r);

  // stage-0 sandwich (vs sigma0 budget) with the w-amplitude cutoff eta0
  auto eta0w = [&](double r) { return smooth_step((edge - r) / P.delta1); };
  double up25 = 1e9, lo25 = 1e9, up25_r = 0, lo25_r = 0;
  for (int i = 1; i < 40000; ++i) {
    double r = static_cast<double>(i) / 40000.0;
    double dA, dB;
    defAB(r, dA, dB);
    double e0 = eta0w(r);
    double ddA = (1.0 - e0 * e0) * dA + e0 * e0 * P.delta1;
    double ddB = (1.0 - e0 * e0) * dB + e0 * e0 * P.delta1;
    double ht = ht_of(r);
    double s2 = P.sig0 * P.sig0;
    double h0 = (1.0 - s2 * (2.0 + e0)) / (1.0 - s2 * (2.0 + e0) * (2.0 + e0)) *
                    (1.0 - e0 * e0) * ht +
                e0 * e0 / (1.0 - s2 * (2.0 + e0) * (2.0 + e0)) * P.delta1;
    double bud = P.sig0 * (1.0 + e0);
    double up = (1.0 + bud) * h0 - std::max(ddA, ddB);
    double lo = std::min(ddA, ddB) - (1.0 - bud) * h0;
    if (up / h0 < up25) { up25 = up / h0; up25_r = r; }
    if (lo / h0 < lo25) { lo25 = lo / h0; lo25_r = r; }
  }
  std::printf("(25) q=0 rel margins: upper %.4f at r=%.3f | lower %.4f at r=%.3f\n",
              up25, up25_r, lo25, lo25_r);

  // stage-0 tau scale deep inside and the coefficient floor
  double h0_in = P.delta1 / (1.0 - 9.0 * P.sig0 * P.sig0);
  double t0 = (P.delta1 - P.delta2) / h0_in;
  std::printf("deep tau0 = %.4f -> c = %.4f (floor 0.25)\n", t0,
              std::sqrt(2.0 * t0 / 3.0));

  // full floor profile to catch any second failure zone of the raw cone
  std::printf("raw floor profile (should be negative only inside supp u_rad):\n");
  double bad_lo = -1, bad_hi = -1;
  for (int i = 1; i <= 8840; ++i) {
    double r = i / 10000.0;
    double raw = min_L3_worst(A_of(r) - 0.5 * P.rho, B_of(r) - 0.5 * P.rho);
    if (raw < 0.003) {
      if (bad_lo < 0) bad_lo = r;
      bad_hi = r;
    }
  }
  std::printf("  raw floor < 0.003 on [%.4f, %.4f]; window supports: rad [0.53, 0.81], ang [0.235, 0.505]\n",
              bad_lo, bad_hi);

  std::printf("A/B profile:\n");
  for (int i = 4; i <= 34; ++i) {
    double r = i * 0.025;
    std::printf("  r=%.3f A=%.4f B=%.4f B-A=%+.4f urad=%.2f\n", r, A_of(r),
                B_of(r), B_of(r) - A_of(r), urad_of(r));
  }
  return 0;
}
