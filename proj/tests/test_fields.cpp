#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "capflex/field.hpp"
#include "capflex/holder.hpp"

using namespace capflex;

namespace {

constexpr uint64_t kSeed = 1234;
constexpr int kBudget = 4096;

AnalyticMap scalar_map(std::function<double(double, double)> f,
                       std::function<void(double, double, double*)> grad) {
  AnalyticMap m;
  m.dim = 1;
  m.value = [f](double x, double y, double* out) { out[0] = f(x, y); };
  m.jacobian = std::move(grad);
  return m;
}

AnalyticMap identity_inclusion() {
  AnalyticMap m;
  m.dim = 2;
  m.value = [](double x, double y, double* out) {
    out[0] = x;
    out[1] = y;
  };
  m.jacobian = [](double, double, double* out) {
    out[0] = 1.0;
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = 1.0;
  };
  return m;
}

AnalyticMap cap_chart(double R) {
  AnalyticMap m;
  m.dim = 3;
  m.value = [R](double x, double y, double* out) {
    out[0] = x;
    out[1] = y;
    out[2] = std::sqrt(R * R - x * x - y * y) - std::sqrt(R * R - 1.0);
  };
  m.jacobian = [R](double x, double y, double* out) {
    const double s = std::sqrt(R * R - x * x - y * y);
    out[0] = 1.0;
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = 1.0;
    out[4] = -x / s;
    out[5] = -y / s;
  };
  return m;
}

double max_fd_gap(const JetField& f) {
  JetField fd = fd_jacobian_of(f);
  double gap = 0.0;
  const Grid& g = *f.grid;
  for (int idx : g.masked_nodes()) {
    const int ix = g.ix_of(idx), iy = g.iy_of(idx);
    if (ix == 0 || ix == g.n - 1 || iy == 0 || iy == g.n - 1) continue;
    for (int i = 0; i < f.dim; ++i)
      for (int k = 0; k < 2; ++k)
        gap = std::max(gap, std::fabs(f.dvalue(idx, i, k) - fd.dvalue(idx, i, k)));
  }
  return gap;
}

// Random trig polynomial with frequencies up to fmax, deterministic in seed.
struct TrigPoly {
  std::vector<std::array<double, 4>> terms;  // amp, k1, k2, phase

  explicit TrigPoly(uint64_t seed, int nterms = 6, double fmax = 8.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ua(-1.0, 1.0);
    std::uniform_real_distribution<double> uf(0.5, fmax);
    std::uniform_real_distribution<double> up(0.0, 2.0 * M_PI);
    for (int t = 0; t < nterms; ++t)
      terms.push_back({ua(rng), uf(rng), uf(rng), up(rng)});
  }
  double value(double x, double y) const {
    double s = 0.0;
    for (const auto& t : terms) s += t[0] * std::sin(t[1] * x + t[2] * y + t[3]);
    return s;
  }
  void grad(double x, double y, double* out) const {
    out[0] = out[1] = 0.0;
    for (const auto& t : terms) {
      const double c = t[0] * std::cos(t[1] * x + t[2] * y + t[3]);
      out[0] += c * t[1];
      out[1] += c * t[2];
    }
  }
  JetField sample_on(GridPtr g) const {
    return sample(scalar_map([this](double x, double y) { return value(x, y); },
                             [this](double x, double y, double* o) { grad(x, y, o); }),
                  g);
  }
};

}  // namespace

TEST_CASE("sample: identity inclusion has identity jacobian") {
  auto g = make_grid(65);
  JetField f = sample(identity_inclusion(), g);
  for (int idx : g->masked_nodes()) {
    CHECK(f.dvalue(idx, 0, 0) == 1.0);
    CHECK(f.dvalue(idx, 0, 1) == 0.0);
    CHECK(f.dvalue(idx, 1, 0) == 0.0);
    CHECK(f.dvalue(idx, 1, 1) == 1.0);
  }
}

TEST_CASE("sample: constant map has zero jacobian") {
  auto g = make_grid(65);
  AnalyticMap m;
  m.dim = 3;
  m.value = [](double, double, double* out) {
    out[0] = 0.5;
    out[1] = -2.0;
    out[2] = 7.0;
  };
  m.jacobian = [](double, double, double* out) {
    for (int i = 0; i < 6; ++i) out[i] = 0.0;
  };
  JetField f = sample(m, g);
  for (int idx : g->masked_nodes())
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 2; ++k) CHECK(f.dvalue(idx, i, k) == 0.0);
}

TEST_CASE("sample: FD jacobian matches analytic for (x1^2, x2) on 129^2") {
  auto g = make_grid(129);
  AnalyticMap m;
  m.dim = 2;
  m.value = [](double x, double y, double* out) {
    out[0] = x * x;
    out[1] = y;
  };
  m.jacobian = [](double x, double, double* out) {
    out[0] = 2.0 * x;
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = 1.0;
  };
  JetField f = sample(m, g);
  CHECK(max_fd_gap(f) <= 1e-3);
}

TEST_CASE("pullback: identity gives the euclidean metric") {
  auto g = make_grid(65);
  MetricField p = pullback(sample(identity_inclusion(), g));
  for (int idx : g->masked_nodes()) {
    Sym2 s = p.at(idx);
    CHECK(s.a11 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.a12 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(s.a22 == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("pullback: (2x1, x2, 0) gives diag(4,1)") {
  auto g = make_grid(65);
  AnalyticMap m;
  m.dim = 3;
  m.value = [](double x, double y, double* out) {
    out[0] = 2.0 * x;
    out[1] = y;
    out[2] = 0.0;
  };
  m.jacobian = [](double, double, double* out) {
    out[0] = 2.0;
    out[1] = 0.0;
    out[2] = 0.0;
    out[3] = 1.0;
    out[4] = 0.0;
    out[5] = 0.0;
  };
  MetricField p = pullback(sample(m, g));
  for (int idx : g->masked_nodes()) {
    Sym2 s = p.at(idx);
    CHECK(s.a11 == 4.0);
    CHECK(s.a12 == 0.0);
    CHECK(s.a22 == 1.0);
  }
}

TEST_CASE("pullback: cap chart matches the closed-form cap metric") {
  const double R = 2.0;
  auto g = make_grid(129);
  MetricField p = pullback(sample(cap_chart(R), g));
  double gap = 0.0;
  for (int idx : g->masked_nodes()) {
    const double x = g->x1_of(idx), y = g->x2_of(idx);
    const double den = R * R - x * x - y * y;
    Sym2 exact{1.0 + x * x / den, x * y / den, 1.0 + y * y / den};
    gap = std::max(gap, (p.at(idx) - exact).max_abs());
  }
  CHECK(gap <= 1e-12);
}

TEST_CASE("holder_seminorm: constant field has zero seminorms") {
  auto g = make_grid(129);
  JetField f = sample(scalar_map([](double, double) { return 3.25; },
                                 [](double, double, double* o) { o[0] = o[1] = 0.0; }),
                      g);
  for (int k = 0; k <= 2; ++k)
    for (double a : {0.0, 0.5, 1.0}) {
      if (k == 0 && a == 0.0) continue;  // sup norm of the constant itself
      CHECK(holder_seminorm(f, k, a, kBudget, kSeed).value == doctest::Approx(0.0));
    }
}

TEST_CASE("holder_seminorm: lipschitz constant of x1 is 1") {
  auto g = make_grid(257);
  JetField f = sample(scalar_map([](double x, double) { return x; },
                                 [](double, double, double* o) {
                                   o[0] = 1.0;
                                   o[1] = 0.0;
                                 }),
                      g);
  auto est = holder_seminorm(f, 0, 1.0, kBudget, kSeed);
  CHECK(est.value <= 1.0 + 1e-12);
  CHECK(est.value >= 1.0 - 1e-6);
}

TEST_CASE("holder_seminorm: oscillation sin(64 x1) reaches 0.9 * frequency") {
  auto g = make_grid(513);
  const double lam = 64.0;
  JetField f = sample(scalar_map([lam](double x, double) { return std::sin(lam * x); },
                                 [lam](double x, double, double* o) {
                                   o[0] = lam * std::cos(lam * x);
                                   o[1] = 0.0;
                                 }),
                      g);
  auto est = holder_seminorm(f, 0, 1.0, kBudget, kSeed);
  CHECK(est.value >= 0.9 * lam);
  CHECK(est.value <= lam + 1e-9);
}

TEST_CASE("holder_seminorm: monotone in alpha for fixed pairs") {
  auto g = make_grid(257);
  TrigPoly p(77);
  JetField f = p.sample_on(g);
  double prev = holder_seminorm(f, 0, 0.2, kBudget, kSeed).value;
  for (double a : {0.4, 0.6, 0.8, 1.0}) {
    double cur = holder_seminorm(f, 0, a, kBudget, kSeed).value;
    CHECK(cur >= prev - 1e-12);
    prev = cur;
  }
}

TEST_CASE("holder_seminorm: degraded flag tracks pair budget") {
  auto g = make_grid(129);
  TrigPoly p(5);
  JetField f = p.sample_on(g);
  CHECK(holder_seminorm(f, 0, 0.5, 128, kSeed).degraded);
  CHECK_FALSE(holder_seminorm(f, 0, 0.5, g->size() + 1, kSeed).degraded);
}

TEST_CASE("check_interpolation: holds for the documented cases with C=3") {
  auto g = make_grid(257);
  JetField cst = sample(scalar_map([](double, double) { return 1.0; },
                                   [](double, double, double* o) { o[0] = o[1] = 0.0; }),
                        g);
  CHECK(check_interpolation(cst, 1.0, 0.5, 3.0, kBudget, kSeed) <= 0.0);

  JetField s8 = sample(scalar_map([](double x, double) { return std::sin(8.0 * x); },
                                  [](double x, double, double* o) {
                                    o[0] = 8.0 * std::cos(8.0 * x);
                                    o[1] = 0.0;
                                  }),
                       g);
  CHECK(check_interpolation(s8, 1.0, 0.5, 3.0, kBudget, kSeed) <= 0.0);

  auto wval = [](double x, double) {
    double s = 0.0;
    for (int j = 0; j <= 6; ++j) s += std::pow(2.0, -0.5 * j) * std::cos(std::pow(2.0, j) * x);
    return s;
  };
  auto wgrad = [](double x, double, double* o) {
    o[0] = 0.0;
    o[1] = 0.0;
    for (int j = 0; j <= 6; ++j)
      o[0] -= std::pow(2.0, 0.5 * j) * std::sin(std::pow(2.0, j) * x);
  };
  JetField w = sample(scalar_map(wval, wgrad), g);
  CHECK(check_interpolation(w, 1.0, 0.5, 3.0, kBudget, kSeed) <= 0.0);
}

TEST_CASE("leibniz product estimate with C=4 on random smooth fields") {
  auto g = make_grid(257);
  for (uint64_t seed : {11ULL, 22ULL, 33ULL}) {
    TrigPoly pf(seed), pg(seed + 100);
    JetField f = pf.sample_on(g);
    JetField h = pg.sample_on(g);
    JetField prod = sample(
        scalar_map([&](double x, double y) { return pf.value(x, y) * pg.value(x, y); },
                   [&](double x, double y, double* o) {
                     double gf[2], gg[2];
                     pf.grad(x, y, gf);
                     pg.grad(x, y, gg);
                     o[0] = gf[0] * pg.value(x, y) + pf.value(x, y) * gg[0];
                     o[1] = gf[1] * pg.value(x, y) + pf.value(x, y) * gg[1];
                   }),
        g);
    for (double r : {0.5, 1.0}) {
      const double lhs = holder_seminorm(prod, 0, r, kBudget, kSeed).value;
      const double fr = holder_seminorm(f, 0, r, kBudget, kSeed).value;
      const double hr = holder_seminorm(h, 0, r, kBudget, kSeed).value;
      const double f0 = holder_seminorm(f, 0, 0.0, kBudget, kSeed).value;
      const double h0 = holder_seminorm(h, 0, 0.0, kBudget, kSeed).value;
      CHECK(lhs <= 4.0 * (fr * h0 + f0 * hr));
    }
  }
}

TEST_CASE("composition estimate with C=8 on random smooth fields") {
  auto g = make_grid(257);
  // Psi(t) = sin(2t): [Psi]_1 = 2, [Psi]_2 = 4.
  const double psi1 = 2.0, psi2 = 4.0;
  for (uint64_t seed : {7ULL, 17ULL}) {
    TrigPoly pu(seed, 5, 4.0);
    JetField u = pu.sample_on(g);
    JetField comp = sample(
        scalar_map([&](double x, double y) { return std::sin(2.0 * pu.value(x, y)); },
                   [&](double x, double y, double* o) {
                     double gu[2];
                     pu.grad(x, y, gu);
                     const double c = 2.0 * std::cos(2.0 * pu.value(x, y));
                     o[0] = c * gu[0];
                     o[1] = c * gu[1];
                   }),
        g);
    const double u0 = holder_seminorm(u, 0, 0.0, kBudget, kSeed).value;
    for (int k = 1; k <= 2; ++k) {
      const double lhs = holder_seminorm(comp, k, 0.0, kBudget, kSeed).value;
      const double uk = holder_seminorm(u, k, 0.0, kBudget, kSeed).value;
      const double psik = (k == 1) ? psi1 : psi2;
      CHECK(lhs <= 8.0 * uk * (psi1 + std::pow(u0, k - 1) * psik));
    }
  }
}

TEST_CASE("pullback is positive semidefinite for random jets") {
  auto g = make_grid(129);
  for (uint64_t seed : {3ULL, 9ULL}) {
    TrigPoly a(seed), b(seed + 1), c(seed + 2);
    AnalyticMap m;
    m.dim = 3;
    m.value = [&](double x, double y, double* o) {
      o[0] = a.value(x, y);
      o[1] = b.value(x, y);
      o[2] = c.value(x, y);
    };
    m.jacobian = [&](double x, double y, double* o) {
      a.grad(x, y, o);
      b.grad(x, y, o + 2);
      c.grad(x, y, o + 4);
    };
    MetricField p = pullback(sample(m, g));
    CHECK(p.min_eig_masked() >= -1e-12);
  }
}

TEST_CASE("csv dump: header and masked row count") {
  auto g = make_grid(33);
  JetField f = sample(identity_inclusion(), g);
  const char* path = "test_fields_dump.csv";
  dump_csv(f, path);
  std::FILE* fp = std::fopen(path, "r");
  REQUIRE(fp);
  char line[512];
  REQUIRE(std::fgets(line, sizeof line, fp));
  CHECK(std::string(line) == "x1,x2,c0,c1\n");
  int rows = 0;
  while (std::fgets(line, sizeof line, fp)) ++rows;
  std::fclose(fp);
  std::remove(path);
  CHECK(rows == static_cast<int>(g->masked_nodes().size()));
}
