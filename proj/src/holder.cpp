#include "capflex/holder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "capflex/errors.hpp"

namespace capflex {

namespace {

// Derivative of component arrays along axis `m` at a masked node, preferring
// centered differences and falling back to one-sided stencils at the rim.
double fd_along(const Grid& g, int idx, int m,
                const std::function<double(int)>& get) {
  const int n = g.n;
  const int i = (m == 0) ? g.ix_of(idx) : g.iy_of(idx);
  const int step = (m == 0) ? 1 : n;
  const double h = g.spacing;
  const bool has_prev = i > 0 && g.masked(idx - step);
  const bool has_next = i < n - 1 && g.masked(idx + step);
  if (has_prev && has_next) return (get(idx + step) - get(idx - step)) / (2.0 * h);
  if (has_next) {
    if (i < n - 2 && g.masked(idx + 2 * step))
      return (-3.0 * get(idx) + 4.0 * get(idx + step) - get(idx + 2 * step)) / (2.0 * h);
    return (get(idx + step) - get(idx)) / h;
  }
  if (has_prev) {
    if (i > 1 && g.masked(idx - 2 * step))
      return (3.0 * get(idx) - 4.0 * get(idx - step) + get(idx - 2 * step)) / (2.0 * h);
    return (get(idx) - get(idx - step)) / h;
  }
  return 0.0;
}

struct DkEval {
  const JetField& f;
  int k;

  int ncomp() const {
    if (k == 0) return f.dim;
    if (k == 1) return f.dim * 2;
    return f.dim * 4;
  }

  void eval(int idx, double* out) const {
    if (k == 0) {
      for (int i = 0; i < f.dim; ++i) out[i] = f.value(idx, i);
      return;
    }
    if (k == 1) {
      for (int i = 0; i < f.dim; ++i)
        for (int a = 0; a < 2; ++a) out[i * 2 + a] = f.dvalue(idx, i, a);
      return;
    }
    for (int i = 0; i < f.dim; ++i)
      for (int a = 0; a < 2; ++a)
        for (int m = 0; m < 2; ++m)
          out[(i * 2 + a) * 2 + m] = fd_along(
              *f.grid, idx, m, [&](int j) { return f.dvalue(j, i, a); });
  }
};

double sup_dk(const DkEval& ev) {
  std::vector<double> buf(ev.ncomp());
  double m = 0.0;
  for (int idx : ev.f.grid->masked_nodes()) {
    ev.eval(idx, buf.data());
    double s = 0.0;
    for (double c : buf) s += c * c;
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

}  // namespace

HolderEstimate holder_seminorm(const JetField& f, int k, double alpha, int pair_budget,
                               uint64_t seed) {
  if (k < 0 || k > 2) throw ConfigError("holder_seminorm: k must be 0..2");
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("holder_seminorm: alpha in [0,1]");
  const Grid& g = *f.grid;
  DkEval ev{f, k};
  HolderEstimate est;
  est.k = k;
  est.alpha = alpha;
  est.pair_budget = pair_budget;
  est.degraded = pair_budget < g.size();
  if (alpha == 0.0) {
    est.value = sup_dk(ev);
    return est;
  }
  const auto& nodes = g.masked_nodes();
  std::vector<double> ba(ev.ncomp()), bb(ev.ncomp());
  double best = 0.0;
  // Dyadic separation bands (2^{-m-1}, 2^{-m}], all within diameter 1.
  for (int m = 0;; ++m) {
    const double hi = std::ldexp(1.0, -m);
    const double lo = hi / 2.0;
    if (hi < 2.0 * g.spacing) break;
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<uint64_t>(m) + 1);
    std::uniform_int_distribution<size_t> pick(0, nodes.size() - 1);
    std::uniform_real_distribution<double> ud(lo, hi);
    std::uniform_real_distribution<double> ua(0.0, 2.0 * M_PI);
    int accepted = 0;
    long attempts = 0;
    const long max_attempts = 40L * pair_budget;
    while (accepted < pair_budget && attempts < max_attempts) {
      ++attempts;
      const int ia = nodes[pick(rng)];
      const double d = ud(rng), th = ua(rng);
      const double xb = g.x1_of(ia) + d * std::cos(th);
      const double yb = g.x2_of(ia) + d * std::sin(th);
      const int jx = static_cast<int>(std::lround((xb + 1.0) / g.spacing));
      const int jy = static_cast<int>(std::lround((yb + 1.0) / g.spacing));
      if (jx < 0 || jx >= g.n || jy < 0 || jy >= g.n) continue;
      const int ib = jy * g.n + jx;
      if (!g.masked(ib) || ib == ia) continue;
      const double dx = g.x1_of(ib) - g.x1_of(ia);
      const double dy = g.x2_of(ib) - g.x2_of(ia);
      const double sep = std::hypot(dx, dy);
      if (sep <= lo || sep > hi) continue;
      ++accepted;
      ev.eval(ia, ba.data());
      ev.eval(ib, bb.data());
      double s = 0.0;
      for (int c = 0; c < ev.ncomp(); ++c) {
        const double diff = ba[c] - bb[c];
        s += diff * diff;
      }
      best = std::max(best, std::sqrt(s) / std::pow(sep, alpha));
    }
  }
  est.value = best;
  return est;
}

HolderEstimate holder_seminorm(const ScalarField& f, int k, double alpha, int pair_budget,
                               uint64_t seed) {
  JetField wrap(f.grid, 1);
  for (int idx = 0; idx < f.grid->size(); ++idx) wrap.value(idx, 0) = f.at(idx);
  JetField fd = fd_jacobian_of(wrap);
  wrap.jac = std::move(fd.jac);
  return holder_seminorm(wrap, k, alpha, pair_budget, seed);
}

namespace {

HolderEstimate seminorm_of_order(const JetField& f, double s, int pair_budget,
                                 uint64_t seed) {
  int k = static_cast<int>(std::floor(s));
  double alpha = s - k;
  if (k > 0 && alpha == 0.0 && k <= 2) {
    // [f]_k = sup |D^k f|
    return holder_seminorm(f, k, 0.0, pair_budget, seed);
  }
  return holder_seminorm(f, k, alpha, pair_budget, seed);
}

}  // namespace

double check_interpolation(const JetField& f, double r, double s, double C, int pair_budget,
                           uint64_t seed) {
  if (!(0.0 <= s && s <= r && r <= 2.0)) throw ConfigError("check_interpolation: need 0<=s<=r<=2");
  const double fs = seminorm_of_order(f, s, pair_budget, seed).value;
  const double fr = seminorm_of_order(f, r, pair_budget, seed).value;
  const double f0 = holder_seminorm(f, 0, 0.0, pair_budget, seed).value;
  const double t = (r > 0.0) ? s / r : 0.0;
  return fs - C * std::pow(f0, 1.0 - t) * std::pow(fr, t);
}

double holder_norm(const JetField& f, int k, double alpha, int pair_budget, uint64_t seed) {
  double total = 0.0;
  for (int j = 0; j <= k; ++j) total += holder_seminorm(f, j, 0.0, pair_budget, seed).value;
  if (alpha > 0.0) total += holder_seminorm(f, k, alpha, pair_budget, seed).value;
  return total;
}

}  // namespace capflex
