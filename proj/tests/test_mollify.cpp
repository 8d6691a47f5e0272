#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "capflex/errors.hpp"
#include "capflex/holder.hpp"
#include "capflex/mollify.hpp"

using namespace capflex;

namespace {

constexpr uint64_t kSeed = 99;
constexpr int kBudget = 4096;

// Smooth radial plateau: 1 on r <= r0, 0 on r >= r1, exponential blend.
double bexp(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double bexp_d(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

double plateau(double r, double r0, double r1) {
  if (r <= r0) return 1.0;
  if (r >= r1) return 0.0;
  const double t = (r - r0) / (r1 - r0);
  return bexp(1.0 - t) / (bexp(t) + bexp(1.0 - t));
}

double plateau_dr(double r, double r0, double r1) {
  if (r <= r0 || r >= r1) return 0.0;
  const double t = (r - r0) / (r1 - r0);
  const double den = bexp(t) + bexp(1.0 - t);
  return (-bexp_d(1.0 - t) * bexp(t) - bexp(1.0 - t) * bexp_d(t)) /
         (den * den * (r1 - r0));
}

// Scalar jet f(x) = base(x) * plateau(|x|) with analytic gradient.
JetField bumped(GridPtr g, const std::function<double(double, double)>& base,
                const std::function<void(double, double, double*)>& grad,
                double r0 = 0.6, double r1 = 0.85) {
  AnalyticMap m;
  m.dim = 1;
  m.value = [=](double x, double y, double* o) {
    o[0] = base(x, y) * plateau(std::hypot(x, y), r0, r1);
  };
  m.jacobian = [=](double x, double y, double* o) {
    const double r = std::hypot(x, y);
    const double chi = plateau(r, r0, r1);
    const double dchi = plateau_dr(r, r0, r1);
    double gb[2];
    grad(x, y, gb);
    const double b = base(x, y);
    const double ux = (r > 0.0) ? x / r : 0.0;
    const double uy = (r > 0.0) ? y / r : 0.0;
    o[0] = gb[0] * chi + b * dchi * ux;
    o[1] = gb[1] * chi + b * dchi * uy;
  };
  return sample(m, g);
}

ScalarField to_scalar(const JetField& f) {
  ScalarField s(f.grid);
  for (int idx = 0; idx < f.grid->size(); ++idx) s.at(idx) = f.value(idx, 0);
  return s;
}

}  // namespace

TEST_CASE("kernel weights are nonnegative and sum to one") {
  Kernel k = make_kernel(0.05, 2.0 / 512.0);
  double sum = 0.0;
  for (double w : k.w) {
    CHECK(w >= 0.0);
    sum += w;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k.radius * k.spacing <= k.ell + k.spacing);
}

TEST_CASE("convolve: zero maps to zero") {
  auto g = make_grid(129);
  ScalarField f(g);
  ScalarField out = convolve(f, make_kernel(0.1, g->spacing));
  for (double v : out.v) CHECK(v == 0.0);
}

TEST_CASE("convolve: unit mass preserves constants on the eroded support") {
  auto g = make_grid(257);
  ScalarField f(g);
  for (int idx = 0; idx < g->size(); ++idx)
    f.at(idx) = (g->radius_of(idx) <= 0.5) ? 2.5 : 0.0;
  const double ell = 0.05;
  ScalarField out = convolve(f, make_kernel(ell, g->spacing));
  for (int idx : g->annulus(0.0, 0.5 - ell - 2.0 * g->spacing))
    CHECK(out.at(idx) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("convolve: support violation near the rim is rejected") {
  auto g = make_grid(129);
  ScalarField f(g);
  for (int idx = 0; idx < g->size(); ++idx) f.at(idx) = 1.0;  // everywhere nonzero
  CHECK_THROWS_AS(convolve(f, make_kernel(0.1, g->spacing)), SupportViolation);
}

TEST_CASE("convolve: quadratic closeness ||f - f*phi||_0 <= 2 ell^2 [f]_2") {
  auto g = make_grid(513);
  JetField f = bumped(
      g, [](double x, double) { return std::sin(16.0 * x); },
      [](double x, double, double* o) {
        o[0] = 16.0 * std::cos(16.0 * x);
        o[1] = 0.0;
      });
  const double ell = 8.0 * g->spacing;
  ScalarField sf = to_scalar(f);
  ScalarField out = convolve(sf, make_kernel(ell, g->spacing));
  double gap = 0.0;
  for (int idx : g->masked_nodes()) gap = std::max(gap, std::fabs(sf.at(idx) - out.at(idx)));
  const double f2 = holder_seminorm(f, 2, 0.0, kBudget, kSeed).value;
  CHECK(gap <= 2.0 * ell * ell * f2);
}

TEST_CASE("convolve: linear, positivity preserving, sup-norm bounded") {
  auto g = make_grid(257);
  JetField a = bumped(g, [](double x, double y) { return std::cos(3.0 * x + y); },
                      [](double x, double y, double* o) {
                        o[0] = -3.0 * std::sin(3.0 * x + y);
                        o[1] = -std::sin(3.0 * x + y);
                      });
  ScalarField sa = to_scalar(a);
  ScalarField sq(g);
  for (int idx = 0; idx < g->size(); ++idx) sq.at(idx) = sa.at(idx) * sa.at(idx);
  Kernel k = make_kernel(0.06, g->spacing);
  ScalarField ca = convolve(sa, k), csq = convolve(sq, k);
  // positivity
  for (double v : csq.v) CHECK(v >= -1e-15);
  // sup bound
  CHECK(sup_norm_masked(ca) <= sup_norm_masked(sa) + 1e-13);
  // linearity: conv(a + 2 sq) = conv(a) + 2 conv(sq)
  ScalarField lin(g);
  for (int idx = 0; idx < g->size(); ++idx) lin.at(idx) = sa.at(idx) + 2.0 * sq.at(idx);
  ScalarField clin = convolve(lin, k);
  double gap = 0.0;
  for (int idx = 0; idx < g->size(); ++idx)
    gap = std::max(gap, std::fabs(clin.at(idx) - ca.at(idx) - 2.0 * csq.at(idx)));
  CHECK(gap <= 1e-12);
}

TEST_CASE("commutator_test: smooth data decays quadratically") {
  auto g = make_grid(513);
  JetField f = bumped(g, [](double x, double y) { return std::sin(5.0 * x + 2.0 * y); },
                      [](double x, double y, double* o) {
                        o[0] = 5.0 * std::cos(5.0 * x + 2.0 * y);
                        o[1] = 2.0 * std::cos(5.0 * x + 2.0 * y);
                      });
  JetField h = bumped(g, [](double x, double y) { return std::cos(4.0 * y - x); },
                      [](double x, double y, double* o) {
                        o[0] = std::sin(4.0 * y - x);
                        o[1] = -4.0 * std::sin(4.0 * y - x);
                      });
  const double slope =
      commutator_test(to_scalar(f), to_scalar(h), {0.05, 0.035, 0.025, 0.0175});
  CHECK(slope >= 1.9);
}

TEST_CASE("commutator_test: squared field commutator is pointwise nonnegative") {
  auto g = make_grid(257);
  JetField f = bumped(g, [](double x, double y) { return std::sin(7.0 * x) + 0.3 * y; },
                      [](double x, double y, double* o) {
                        (void)y;
                        o[0] = 7.0 * std::cos(7.0 * x);
                        o[1] = 0.3;
                      });
  ScalarField sf = to_scalar(f);
  ScalarField sq(g);
  for (int idx = 0; idx < g->size(); ++idx) sq.at(idx) = sf.at(idx) * sf.at(idx);
  Kernel k = make_kernel(0.07, g->spacing);
  ScalarField cf = convolve(sf, k), csq = convolve(sq, k);
  for (int idx : g->masked_nodes())
    CHECK(csq.at(idx) - cf.at(idx) * cf.at(idx) >= -1e-13);
}

TEST_CASE("commutator_test: Weierstrass data at alpha=0.4 lands near slope 0.8") {
  auto g = make_grid(4097);
  auto wval = [](double x, double) {
    double s = 0.0;
    for (int j = 0; j <= 10; ++j) s += std::pow(2.0, -0.4 * j) * std::cos(std::pow(2.0, j) * x);
    return s;
  };
  auto wgrad = [](double x, double, double* o) {
    o[0] = 0.0;
    o[1] = 0.0;
    for (int j = 0; j <= 10; ++j)
      o[0] -= std::pow(2.0, 0.6 * j) * std::sin(std::pow(2.0, j) * x);
  };
  JetField f = bumped(g, [&](double x, double y) { return wval(x, y); }, wgrad);
  ScalarField sf = to_scalar(f);
  const double slope = commutator_test(sf, sf, {0.0175, 0.0125, 0.009, 0.006});
  CHECK(slope >= 0.6);
  CHECK(slope <= 1.1);
}

TEST_CASE("pullback_commutator_slope: smooth map decays quadratically") {
  auto g = make_grid(513);
  const double R = 2.0;
  AnalyticMap chart;
  chart.dim = 3;
  chart.value = [R](double x, double y, double* o) {
    o[0] = x;
    o[1] = y;
    o[2] = std::sqrt(R * R - x * x - y * y) - std::sqrt(R * R - 1.0);
  };
  chart.jacobian = [R](double x, double y, double* o) {
    const double s = std::sqrt(R * R - x * x - y * y);
    o[0] = 1.0;
    o[1] = 0.0;
    o[2] = 0.0;
    o[3] = 1.0;
    o[4] = -x / s;
    o[5] = -y / s;
  };
  JetField v = sample(chart, g);
  const double slope = pullback_commutator_slope(v, {0.08, 0.06, 0.04, 0.03, 0.02});
  CHECK(slope >= 1.8);
}

TEST_CASE("pullback commutator vanishes for the identity inclusion") {
  auto g = make_grid(257);
  AnalyticMap id;
  id.dim = 2;
  id.value = [](double x, double y, double* o) {
    o[0] = x;
    o[1] = y;
  };
  id.jacobian = [](double, double, double* o) {
    o[0] = 1.0;
    o[1] = 0.0;
    o[2] = 0.0;
    o[3] = 1.0;
  };
  JetField v = sample(id, g);
  JetField w = convolve(v, make_kernel(0.05, g->spacing), /*check_support=*/false);
  MetricField pw = pullback(w);
  double gap = 0.0;
  for (int idx : g->annulus(0.0, 0.5))
    gap = std::max(gap, (pw.at(idx) - Sym2{1.0, 0.0, 1.0}).max_abs());
  CHECK(gap <= 1e-10);
}

TEST_CASE("smoothing estimate [f*phi]_{r+s} <= 4 ell^{-s} [f]_r") {
  auto g = make_grid(513);
  const double ell = 0.1;
  Kernel k = make_kernel(ell, g->spacing);
  for (uint64_t seed : {1ULL, 2ULL}) {
    const double w1 = 3.0 + static_cast<double>(seed), w2 = 5.0 - static_cast<double>(seed);
    JetField f = bumped(g,
                        [=](double x, double y) { return std::sin(w1 * x + w2 * y); },
                        [=](double x, double y, double* o) {
                          o[0] = w1 * std::cos(w1 * x + w2 * y);
                          o[1] = w2 * std::cos(w1 * x + w2 * y);
                        });
    JetField cf = convolve(f, k);
    const double f0 = holder_seminorm(f, 0, 0.0, kBudget, kSeed).value;
    const double f1 = holder_seminorm(f, 1, 0.0, kBudget, kSeed).value;
    const double cf1 = holder_seminorm(cf, 1, 0.0, kBudget, kSeed).value;
    const double cf2 = holder_seminorm(cf, 2, 0.0, kBudget, kSeed).value;
    CHECK(cf1 <= 4.0 / ell * f0);  // (r,s) = (0,1)
    CHECK(cf2 <= 4.0 / ell * f1);  // (r,s) = (1,1)
  }
}
