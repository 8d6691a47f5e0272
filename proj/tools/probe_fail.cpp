// throwaway: profile the flattened deficit near the failing node at n=2049
#include <cmath>
#include <cstdio>

#include "capflex/bootstrap.hpp"
#include "capflex/capgeom.hpp"
#include "capflex/decomp.hpp"
#include "capflex/field.hpp"

using namespace capflex;

int main() {
  const int n = 2049;
  const double delta = 0.116;
  auto grid = make_grid(n);
  CapParams p;
  p.eta_param = 0.92;
  p.eps_param = 0.245;
  JetField u = build_short_map(p, grid);
  MetricField g = cap_metric(p.R, grid);

  AnalyticMap corr = anisotropy_flattener(grid, u, g);
  JetField c = sample(corr, grid);
  JetField u1 = u;
  for (size_t i = 0; i < u1.values.size(); ++i) u1.values[i] += c.values[i];
  for (size_t i = 0; i < u1.jac.size(); ++i) u1.jac[i] += c.jac[i];

  MetricField pb0 = pullback(u);
  MetricField pb1 = pullback(u1);

  double rho = 1e9;
  for (int idx : grid->annulus(0.0, 1.0 - delta)) {
    const Sym2 D = g.at(idx) - pb0.at(idx);
    rho = std::min(rho, D.min_eig());
  }
  std::printf("rho = %.6f\n", rho);

  const PrimitiveBasis basis = primitive_basis();
  double minL = 1e9, minEig = 1e9;
  int argL = -1, argE = -1;
  for (int idx : grid->annulus(0.0, 1.0 - delta)) {
    const Sym2 tau = g.at(idx) - pb1.at(idx) - sym_identity() * (0.5 * rho);
    const auto L = basis.coeffs(tau);
    for (double Lk : L)
      if (Lk < minL) {
        minL = Lk;
        argL = idx;
      }
    const double e = tau.min_eig();
    if (e < minEig) {
      minEig = e;
      argE = idx;
    }
  }
  std::printf("min L_k(tau) = %.6g at (%.4f, %.4f) r=%.4f\n", minL, grid->x1_of(argL),
              grid->x2_of(argL), grid->radius_of(argL));
  std::printf("min eig(tau) = %.6g at (%.4f, %.4f) r=%.4f\n", minEig, grid->x1_of(argE),
              grid->x2_of(argE), grid->radius_of(argE));

  // radial profile along the ray through the failing node
  const double th = std::atan2(-0.774414, -0.049805);
  std::printf("    r        A        B        A'       B'      minL(tau)\n");
  for (double r = 0.45; r < 0.90; r += 0.01) {
    const double x1 = r * std::cos(th), x2 = r * std::sin(th);
    const int ix = static_cast<int>(std::lround((x1 + 1.0) / grid->spacing));
    const int iy = static_cast<int>(std::lround((x2 + 1.0) / grid->spacing));
    const int idx = iy * n + ix;
    const Sym2 D0 = g.at(idx) - pb0.at(idx);
    const Sym2 D1 = g.at(idx) - pb1.at(idx);
    const double c1 = grid->x1_of(idx), c2 = grid->x2_of(idx);
    const double rr = std::hypot(c1, c2);
    const double nr1 = c1 / rr, nr2 = c2 / rr;
    auto rad = [&](const Sym2& S) {
      return S.a11 * nr1 * nr1 + 2 * S.a12 * nr1 * nr2 + S.a22 * nr2 * nr2;
    };
    auto ang = [&](const Sym2& S) {
      return S.a11 * nr2 * nr2 - 2 * S.a12 * nr1 * nr2 + S.a22 * nr1 * nr1;
    };
    const Sym2 tau = D1 - sym_identity() * (0.5 * rho);
    const auto L = basis.coeffs(tau);
    std::printf("  %.3f  %8.5f %8.5f %8.5f %8.5f  %9.6f\n", rr, rad(D0), ang(D0), rad(D1),
                ang(D1), std::min({L[0], L[1], L[2]}));
  }
  return 0;
}
