#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "capflex/errors.hpp"
#include "capflex/holder.hpp"
#include "capflex/normals.hpp"

using namespace capflex;

namespace {

// Planar radial short-map stand-in u = (0.9 x1, 0.9 x2, 0, ..., 0) in R^8.
JetField planar_map(GridPtr g) {
  AnalyticMap m;
  m.dim = 8;
  m.value = [](double x, double y, double* o) {
    for (int i = 0; i < 8; ++i) o[i] = 0.0;
    o[0] = 0.9 * x;
    o[1] = 0.9 * y;
  };
  m.jacobian = [](double, double, double* o) {
    for (int i = 0; i < 16; ++i) o[i] = 0.0;
    o[0] = 0.9;
    o[3] = 0.9;
  };
  return sample(m, g);
}

}  // namespace

TEST_CASE("reference_frame: six constant fields, exactly orthonormal and tangent-free") {
  auto g = make_grid(65);
  JetField u = planar_map(g);
  auto frame = reference_frame(u);
  REQUIRE(frame.size() == 6);
  for (size_t i = 0; i < 6; ++i) {
    for (size_t j = 0; j < 6; ++j) {
      double dot = 0.0;
      for (int c = 0; c < 8; ++c) dot += frame[i][c] * frame[j][c];
      CHECK(dot == (i == j ? 1.0 : 0.0));
    }
    // tangency is exact: the jacobian lives in the plane
    for (int idx : g->masked_nodes())
      for (int k = 0; k < 2; ++k) {
        double dot = 0.0;
        for (int c = 0; c < 8; ++c) dot += frame[i][c] * u.dvalue(idx, c, k);
        CHECK(dot == 0.0);
      }
  }
}

TEST_CASE("reference_frame: rejects non-planar maps") {
  auto g = make_grid(33);
  AnalyticMap m;
  m.dim = 4;
  m.value = [](double x, double y, double* o) {
    o[0] = x;
    o[1] = y;
    o[2] = 0.1 * x;
    o[3] = 0.0;
  };
  m.jacobian = [](double, double, double* o) {
    for (int i = 0; i < 8; ++i) o[i] = 0.0;
    o[0] = 1.0;
    o[3] = 1.0;
    o[4] = 0.1;
  };
  CHECK_THROWS_AS(reference_frame(sample(m, g)), NotPlanar);
}

TEST_CASE("perturbed_frame: v = u reproduces the reference frame exactly") {
  auto g = make_grid(65);
  JetField u = planar_map(g);
  NormalFrame f = perturbed_frame(u, u, 0.5);
  for (int idx : g->masked_nodes())
    for (int i = 0; i < f.d; ++i)
      for (int c = 0; c < 8; ++c)
        CHECK(f.get(idx, i, c) == doctest::Approx(c == i + 2 ? 1.0 : 0.0).epsilon(1e-14));
}

TEST_CASE("perturbed_frame: closeness bound with C = 10") {
  auto g = make_grid(257);
  JetField u = planar_map(g);
  // small bump along a normal direction (component 4), with slight planar mix
  const double eps = 1e-2;
  AnalyticMap m;
  m.dim = 8;
  m.value = [eps](double x, double y, double* o) {
    for (int i = 0; i < 8; ++i) o[i] = 0.0;
    o[0] = 0.9 * x + eps * 0.1 * std::sin(x);
    o[1] = 0.9 * y;
    o[4] = eps * std::sin(2.0 * x) * std::cos(y);
  };
  m.jacobian = [eps](double x, double y, double* o) {
    for (int i = 0; i < 16; ++i) o[i] = 0.0;
    o[0] = 0.9 + eps * 0.1 * std::cos(x);
    o[3] = 0.9;
    o[8] = eps * 2.0 * std::cos(2.0 * x) * std::cos(y);
    o[9] = -eps * std::sin(2.0 * x) * std::sin(y);
  };
  JetField v = sample(m, g);
  NormalFrame f = perturbed_frame(u, v, 0.5);

  JetField diff(g, 8);
  for (size_t i = 0; i < diff.values.size(); ++i) diff.values[i] = v.values[i] - u.values[i];
  for (size_t i = 0; i < diff.jac.size(); ++i) diff.jac[i] = v.jac[i] - u.jac[i];
  const double dist = holder_norm(diff, 1, 0.0, 4096, 1);

  auto ref = reference_frame(u);
  double gap = 0.0;
  for (int idx : g->masked_nodes())
    for (int i = 0; i < f.d; ++i) {
      double s = 0.0;
      for (int c = 0; c < 8; ++c) {
        const double dcomp = f.get(idx, i, c) - ref[static_cast<size_t>(i)][c];
        s += dcomp * dcomp;
      }
      gap = std::max(gap, std::sqrt(s));
    }
  CHECK(gap <= 10.0 * dist);
}

TEST_CASE("perturbed_frame: invariants after a corrugation at lambda=64") {
  auto g = make_grid(1025);
  JetField u = planar_map(g);
  const double lam = 64.0, a = 0.1;
  AnalyticMap m;
  m.dim = 8;
  m.value = [lam, a](double x, double y, double* o) {
    for (int i = 0; i < 8; ++i) o[i] = 0.0;
    o[0] = 0.9 * x;
    o[1] = 0.9 * y;
    o[2] = a / lam * std::sin(lam * x);
    o[5] = a / lam * std::cos(lam * x);
  };
  m.jacobian = [lam, a](double x, double, double* o) {
    for (int i = 0; i < 16; ++i) o[i] = 0.0;
    o[0] = 0.9;
    o[3] = 0.9;
    o[4] = a * std::cos(lam * x);
    o[10] = -a * std::sin(lam * x);
  };
  JetField v = sample(m, g);
  NormalFrame f = perturbed_frame(u, v, 0.5);
  FrameQuality q = frame_quality(f, v);
  CHECK(q.orthonormality <= 1e-10);
  CHECK(q.tangency <= 1e-8);
}

TEST_CASE("perturbed_frame: rejects maps far from the reference") {
  auto g = make_grid(65);
  JetField u = planar_map(g);
  AnalyticMap m;
  m.dim = 8;
  m.value = [](double x, double y, double* o) {
    for (int i = 0; i < 8; ++i) o[i] = 0.0;
    o[0] = 0.9 * x;
    o[1] = 0.9 * y;
    o[4] = 2.0 * x;
  };
  m.jacobian = [](double, double, double* o) {
    for (int i = 0; i < 16; ++i) o[i] = 0.0;
    o[0] = 0.9;
    o[3] = 0.9;
    o[8] = 2.0;
  };
  CHECK_THROWS_AS(perturbed_frame(u, sample(m, g), 0.5), TooFar);
}

TEST_CASE("frame_at: degenerate tangent plane is rejected") {
  double jac[16] = {0.0};
  jac[0] = 1.0;  // d1 v_0 = 1, second column identically zero
  double out[48];
  CHECK_THROWS_AS(frame_at(8, jac, out), DegenerateGram);
}
