#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "capflex/decomp.hpp"
#include "capflex/errors.hpp"

using namespace capflex;

namespace {

MetricField constant_metric(GridPtr g, const Sym2& s) {
  MetricField m(g);
  for (int idx = 0; idx < g->size(); ++idx) m.set(idx, s);
  return m;
}

Sym2 random_sym(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("primitive_basis: rank-one input recovers a unit coefficient") {
  PrimitiveBasis b = primitive_basis();
  for (int k = 0; k < 3; ++k) {
    auto c = b.coeffs(b.primitive(k));
    for (int j = 0; j < 3; ++j)
      CHECK(c[j] == doctest::Approx(j == k ? 1.0 : 0.0).epsilon(1e-14));
  }
}

TEST_CASE("primitive_basis: identity splits evenly into 2/3") {
  PrimitiveBasis b = primitive_basis();
  auto c = b.coeffs(sym_identity());
  for (int k = 0; k < 3; ++k) CHECK(c[k] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("primitive_basis: exact reconstruction of diag(1,-1)") {
  PrimitiveBasis b = primitive_basis();
  const Sym2 s{1.0, 0.0, -1.0};
  const Sym2 r = b.reconstruct(b.coeffs(s));
  CHECK((r - s).max_abs() <= 1e-14);
}

TEST_CASE("linear_decompose: exact nodewise reconstruction") {
  auto g = make_grid(33);
  PrimitiveBasis b = primitive_basis();
  MetricField S(g);
  std::mt19937_64 rng(42);
  for (int idx = 0; idx < g->size(); ++idx) S.set(idx, random_sym(rng, 1.0));
  auto c = linear_decompose(S, b);
  for (int idx : g->masked_nodes()) {
    const Sym2 r = b.reconstruct({c[0].at(idx), c[1].at(idx), c[2].at(idx)});
    CHECK((r - S.at(idx)).max_abs() <= 1e-13);
  }
}

TEST_CASE("nonlinear_decompose: identity with no perturbation gives sqrt(2/3)") {
  auto g = make_grid(17);
  PrimitiveBasis b = primitive_basis();
  MetricField tau = constant_metric(g, sym_identity());
  std::array<MetricField, 3> M{MetricField(g), MetricField(g), MetricField(g)};
  std::array<std::array<MetricField, 3>, 3> Lam;
  for (auto& row : Lam)
    for (auto& m : row) m = MetricField(g);
  auto res = nonlinear_decompose(tau, M, Lam, b, 0.25);
  const double expect = std::sqrt(2.0 / 3.0);
  for (int idx : g->masked_nodes())
    for (int k = 0; k < 3; ++k)
      CHECK(res.c[k].at(idx) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(res.max_residual <= 1e-12);
}

TEST_CASE("nonlinear_decompose: pure quadratic case converges immediately") {
  auto g = make_grid(17);
  PrimitiveBasis b = primitive_basis();
  MetricField tau(g);
  std::mt19937_64 rng(7);
  for (int idx = 0; idx < g->size(); ++idx)
    tau.set(idx, sym_identity() + random_sym(rng, 0.05));
  std::array<MetricField, 3> M{MetricField(g), MetricField(g), MetricField(g)};
  std::array<std::array<MetricField, 3>, 3> Lam;
  for (auto& row : Lam)
    for (auto& m : row) m = MetricField(g);
  auto res = nonlinear_decompose(tau, M, Lam, b, 0.25);
  for (int idx : g->masked_nodes()) {
    const auto l = b.coeffs(tau.at(idx));
    for (int k = 0; k < 3; ++k)
      CHECK(res.c[k].at(idx) == doctest::Approx(std::sqrt(l[k])).epsilon(1e-12));
  }
  CHECK(res.max_residual <= 1e-12);
}

TEST_CASE("nonlinear_decompose: random small perturbations solve fast") {
  auto g = make_grid(33);
  PrimitiveBasis b = primitive_basis();
  MetricField tau = constant_metric(g, sym_identity());
  std::array<MetricField, 3> M{MetricField(g), MetricField(g), MetricField(g)};
  std::array<std::array<MetricField, 3>, 3> Lam;
  for (auto& row : Lam)
    for (auto& m : row) m = MetricField(g);
  std::mt19937_64 rng(123);
  for (int idx = 0; idx < g->size(); ++idx) {
    for (int i = 0; i < 3; ++i) M[i].set(idx, random_sym(rng, 0.01));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) Lam[i][j].set(idx, random_sym(rng, 0.01));
  }
  auto res = nonlinear_decompose(tau, M, Lam, b, 0.25);
  CHECK(res.max_residual <= 1e-10);
  CHECK(res.max_newton_iters <= 8);

  // independent oracle: Picard iteration c <- sqrt(L(tau - sum c M - sum cc Lam))
  std::mt19937_64 pick(5);
  const auto& nodes = g->masked_nodes();
  std::uniform_int_distribution<size_t> un(0, nodes.size() - 1);
  for (int t = 0; t < 5; ++t) {
    const int idx = nodes[un(pick)];
    std::array<double, 3> c = {std::sqrt(2.0 / 3.0), std::sqrt(2.0 / 3.0),
                               std::sqrt(2.0 / 3.0)};
    for (int step = 0; step < 400; ++step) {
      Sym2 rhs = tau.at(idx);
      for (int i = 0; i < 3; ++i) {
        rhs += M[i].at(idx) * -c[i];
        for (int j = 0; j < 3; ++j) rhs += Lam[i][j].at(idx) * (-c[i] * c[j]);
      }
      const auto l = b.coeffs(rhs);
      for (int i = 0; i < 3; ++i) c[i] = std::sqrt(l[i]);
    }
    for (int i = 0; i < 3; ++i)
      CHECK(res.c[i].at(idx) == doctest::Approx(c[i]).epsilon(1e-8));
  }
}

TEST_CASE("nonlinear_decompose: deterministic across runs") {
  auto g = make_grid(17);
  PrimitiveBasis b = primitive_basis();
  MetricField tau(g);
  std::mt19937_64 rng(9);
  for (int idx = 0; idx < g->size(); ++idx)
    tau.set(idx, sym_identity() + random_sym(rng, 0.03));
  std::array<MetricField, 3> M{MetricField(g), MetricField(g), MetricField(g)};
  std::array<std::array<MetricField, 3>, 3> Lam;
  for (auto& row : Lam)
    for (auto& m : row) m = MetricField(g);
  auto r1 = nonlinear_decompose(tau, M, Lam, b, 0.25);
  auto r2 = nonlinear_decompose(tau, M, Lam, b, 0.25);
  for (int k = 0; k < 3; ++k)
    for (int idx = 0; idx < g->size(); ++idx)
      CHECK(r1.c[k].at(idx) == r2.c[k].at(idx));
}

TEST_CASE("nonlinear_decompose: smallness hypothesis is enforced") {
  auto g = make_grid(9);
  PrimitiveBasis b = primitive_basis();
  MetricField tau = constant_metric(g, sym_identity());
  std::array<MetricField, 3> M{MetricField(g), MetricField(g), MetricField(g)};
  std::array<std::array<MetricField, 3>, 3> Lam;
  for (auto& row : Lam)
    for (auto& m : row) m = MetricField(g);
  M[0] = constant_metric(g, Sym2{0.5, 0.0, 0.5});
  CHECK_THROWS_AS(nonlinear_decompose(tau, M, Lam, b, 0.25, 0.25), SmallnessViolated);
  // with a wider hypothesis radius the same data solves, and the measured
  // smallness is exactly |M[0]| = sqrt(1/2)
  auto res = nonlinear_decompose(tau, M, Lam, b, 0.02, 1.0);
  CHECK(res.smallness_measured == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(res.max_residual <= 1e-12);
}
