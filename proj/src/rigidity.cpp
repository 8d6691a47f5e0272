#include "capflex/rigidity.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "capflex/errors.hpp"

namespace capflex {

namespace {

std::mutex fftw_mutex_1d;

std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x);
  std::vector<std::complex<double>> out(static_cast<size_t>(n / 2) + 1);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex_1d);
    fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()),
                                          FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<double> irfft(std::vector<std::complex<double>> c, int n) {
  std::vector<double> out(static_cast<size_t>(n));
  {
    std::lock_guard<std::mutex> lock(fftw_mutex_1d);
    fftw_plan plan = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(c.data()),
                                          out.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  for (double& v : out) v /= n;
  return out;
}

double sign_of(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }

// Seminorm [.]_alpha over circular sample pairs, subsampled by stride so the
// pair count stays bounded.
double circular_seminorm(const std::vector<double>& s, double alpha) {
  const int m = static_cast<int>(s.size());
  const int stride = std::max(1, m / 4096);
  const double dx = 2.0 * M_PI / m;
  double best = 0.0;
  for (int i = 0; i < m; i += stride)
    for (int j = i + 1; j < m; j += stride) {
      int dij = j - i;
      if (dij > m - dij) dij = m - dij;
      const double d = dx * dij;
      best = std::max(best, std::fabs(s[static_cast<size_t>(i)] - s[static_cast<size_t>(j)]) /
                                std::pow(d, alpha));
    }
  return best;
}

// Coefficients of f g' truncated to |k| <= N.
std::vector<std::complex<double>> derivative_product_coeffs(const PeriodicSample& f,
                                                            const PeriodicSample& g) {
  const int N = f.N;
  std::vector<std::complex<double>> prod(static_cast<size_t>(2 * N) + 1);
  for (int k = -N; k <= N; ++k) {
    std::complex<double> acc(0.0, 0.0);
    const int lo = std::max(-N, k - N), hi = std::min(N, k + N);
    for (int l = lo; l <= hi; ++l)
      acc += std::complex<double>(0.0, static_cast<double>(k - l)) * f.fhat(l) * g.fhat(k - l);
    prod[static_cast<size_t>(k + N)] = acc;
  }
  return prod;
}

double pair_with(const std::vector<std::complex<double>>& prod, const PeriodicSample& phi) {
  const int N = phi.N;
  std::complex<double> total(0.0, 0.0);
  for (int k = -N; k <= N; ++k)
    total += std::conj(phi.fhat(k)) * prod[static_cast<size_t>(k + N)];
  total *= 2.0 * M_PI;
  if (std::fabs(total.imag()) > 1e-10 * (1.0 + std::fabs(total.real())))
    throw ImaginaryResidue("pairing imaginary part " + std::to_string(total.imag()));
  return total.real();
}

double bump_arc(double s, double halfwidth) {
  const double t = s / halfwidth;
  return std::fabs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0;
}

double wrap_pi(double t) {
  while (t > M_PI) t -= 2.0 * M_PI;
  while (t < -M_PI) t += 2.0 * M_PI;
  return t;
}

// Bilinear interpolation of a nodewise quantity at an interior point.
double bilerp(const Grid& g, const std::function<double(int)>& get, double x, double y) {
  double gx = (x + 1.0) / g.spacing, gy = (y + 1.0) / g.spacing;
  int ix = static_cast<int>(std::floor(gx)), iy = static_cast<int>(std::floor(gy));
  ix = std::min(std::max(ix, 0), g.n - 2);
  iy = std::min(std::max(iy, 0), g.n - 2);
  const double fx = gx - ix, fy = gy - iy;
  const int i00 = iy * g.n + ix;
  return (1.0 - fx) * (1.0 - fy) * get(i00) + fx * (1.0 - fy) * get(i00 + 1) +
         (1.0 - fx) * fy * get(i00 + g.n) + fx * fy * get(i00 + g.n + 1);
}

}  // namespace

PeriodicSample make_periodic(std::vector<double> samples) {
  const int m = static_cast<int>(samples.size());
  if (m < 4 || m % 2 != 0) throw ConfigError("make_periodic: need an even sample count >= 4");
  PeriodicSample p;
  p.N = m / 2;
  p.samples = std::move(samples);
  auto c = rfft(p.samples);
  p.coeff.resize(static_cast<size_t>(p.N) + 1);
  for (int k = 0; k <= p.N; ++k)
    p.coeff[static_cast<size_t>(k)] = c[static_cast<size_t>(k)] * (sign_of(k) / m);
  return p;
}

PeriodicSample sample_periodic(const std::function<double(double)>& f, int N) {
  std::vector<double> s(static_cast<size_t>(2 * N));
  for (int j = 0; j < 2 * N; ++j) s[static_cast<size_t>(j)] = f(-M_PI + M_PI * j / N);
  return make_periodic(std::move(s));
}

PeriodicSample even_reflection(const std::function<double(double)>& f, int N) {
  return sample_periodic([&f](double x) { return f(std::fabs(x)); }, N);
}

PeriodicSample zero_extension(const std::function<double(double)>& f, int N) {
  return sample_periodic([&f](double x) { return x >= 0.0 ? f(x) : 0.0; }, N);
}

std::vector<double> synthesize(const PeriodicSample& f) {
  const int m = 2 * f.N;
  std::vector<std::complex<double>> c(static_cast<size_t>(f.N) + 1);
  for (int k = 0; k <= f.N; ++k)
    c[static_cast<size_t>(k)] = f.coeff[static_cast<size_t>(k)] * (sign_of(k) * m);
  return irfft(std::move(c), m);
}

double roundtrip_error(const PeriodicSample& f) {
  const auto back = synthesize(f);
  double worst = 0.0;
  for (size_t j = 0; j < back.size(); ++j)
    worst = std::max(worst, std::fabs(back[j] - f.samples[j]));
  return worst;
}

std::vector<double> spectral_derivative(const PeriodicSample& f) {
  const int m = 2 * f.N;
  std::vector<std::complex<double>> c(static_cast<size_t>(f.N) + 1);
  for (int k = 0; k < f.N; ++k)
    c[static_cast<size_t>(k)] = std::complex<double>(0.0, static_cast<double>(k)) *
                                f.coeff[static_cast<size_t>(k)] * (sign_of(k) * m);
  c[static_cast<size_t>(f.N)] = 0.0;  // drop the unpaired Nyquist bin
  return irfft(std::move(c), m);
}

double bilinear_pairing(const PeriodicSample& f, const PeriodicSample& g,
                        const PeriodicSample& phi) {
  if (f.N != g.N || f.N != phi.N)
    throw ConfigError("bilinear_pairing: mismatched sample sizes");
  return pair_with(derivative_product_coeffs(f, g), phi);
}

double holder_norm_periodic(const PeriodicSample& f, int k, double alpha) {
  if (k != 0 && k != 1) throw ConfigError("holder_norm_periodic: k must be 0 or 1");
  double sup = 0.0;
  for (double v : f.samples) sup = std::max(sup, std::fabs(v));
  if (k == 0) return sup + circular_seminorm(f.samples, alpha);
  const auto d = spectral_derivative(f);
  double dsup = 0.0;
  for (double v : d) dsup = std::max(dsup, std::fabs(v));
  return sup + dsup + circular_seminorm(d, alpha);
}

double estimate_ratio(const PeriodicSample& f, const PeriodicSample& g,
                      const PeriodicSample& phi, double alpha) {
  const double pairing = bilinear_pairing(f, g, phi);
  const double denom = holder_norm_periodic(f, 0, alpha) * holder_norm_periodic(g, 0, alpha) *
                       holder_norm_periodic(phi, 1, alpha);
  return std::fabs(pairing) / denom;
}

std::vector<double> lacunary_ratio_sweep(double alpha, int j_min, int j_max, int N) {
  // off-center bump: a symmetric test function annihilates f f' for even f
  PeriodicSample phi =
      sample_periodic([](double t) { return bump_arc(wrap_pi(t - 0.7), 2.0); }, N);
  std::vector<double> ratios;
  for (int J = j_min; J <= j_max; ++J) {
    PeriodicSample f = sample_periodic(
        [alpha, J](double x) {
          double acc = 0.0;
          for (int j = 0; j <= J; ++j)
            acc += std::pow(2.0, -alpha * j) * std::cos(std::ldexp(1.0, j) * x);
          return acc;
        },
        N);
    ratios.push_back(estimate_ratio(f, f, phi, alpha));
  }
  return ratios;
}

ChristoffelField christoffel(const MetricField& g) {
  const Grid& gr = *g.grid;
  ScalarField e11(g.grid), e12(g.grid), e22(g.grid);
  e11.v = g.a11;
  e12.v = g.a12;
  e22.v = g.a22;
  ChristoffelField out;
  out.grid = g.grid;
  out.G.assign(static_cast<size_t>(gr.size()) * 8, 0.0);
  for (int idx = 0; idx < gr.size(); ++idx) {
    const Sym2 m = g.at(idx);
    const double det = m.a11 * m.a22 - m.a12 * m.a12;
    if (det <= 1e-12) {
      if (gr.masked(idx))
        throw SingularMetric("metric determinant " + std::to_string(det) + " at node " +
                             std::to_string(idx));
      continue;
    }
    double d11[2], d12[2], d22[2];
    fd_gradient(e11, idx, d11);
    fd_gradient(e12, idx, d12);
    fd_gradient(e22, idx, d22);
    // dg[l][j][k] = d_l g_jk
    double dg[2][2][2];
    for (int l = 0; l < 2; ++l) {
      dg[l][0][0] = d11[l];
      dg[l][0][1] = dg[l][1][0] = d12[l];
      dg[l][1][1] = d22[l];
    }
    const double inv[2][2] = {{m.a22 / det, -m.a12 / det}, {-m.a12 / det, m.a11 / det}};
    double* G = out.at(idx);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          double acc = 0.0;
          for (int l = 0; l < 2; ++l)
            acc += inv[i][l] * (dg[j][l][k] + dg[k][l][j] - dg[l][j][k]);
          G[(i * 2 + j) * 2 + k] = 0.5 * acc;
        }
  }
  return out;
}

CurveData make_circle_curve(double radius, int N) {
  if (!(radius > 0.0 && radius < 1.0))
    throw ConfigError("make_circle_curve: radius must lie in ]0,1[");
  CurveData c;
  const int m = 2 * N;
  c.t.resize(static_cast<size_t>(m));
  c.gamma.resize(static_cast<size_t>(m));
  c.dgamma.resize(static_cast<size_t>(m));
  c.W.resize(static_cast<size_t>(m));
  c.dW.resize(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double t = -M_PI + M_PI * j / N;
    c.t[static_cast<size_t>(j)] = t;
    const double ct = std::cos(t), st = std::sin(t);
    c.gamma[static_cast<size_t>(j)] = {radius * ct, radius * st};
    c.dgamma[static_cast<size_t>(j)] = {-radius * st, radius * ct};
    c.W[static_cast<size_t>(j)] = {-radius * st, radius * ct};
    c.dW[static_cast<size_t>(j)] = {-radius * ct, -radius * st};
  }
  return c;
}

ConnectionDefect connection_defect(const JetField& u, const MetricField& g,
                                   const CurveData& curve) {
  const Grid& gr = *u.grid;
  const int m = static_cast<int>(curve.t.size());
  const int dim = u.dim;
  ChristoffelField gam = christoffel(g);

  // interpolate everything along the curve
  std::vector<double> jac_c(static_cast<size_t>(m) * dim * 2);
  std::vector<double> met_c(static_cast<size_t>(m) * 4);
  std::vector<double> gam_c(static_cast<size_t>(m) * 8);
  for (int j = 0; j < m; ++j) {
    const double x = curve.gamma[static_cast<size_t>(j)][0];
    const double y = curve.gamma[static_cast<size_t>(j)][1];
    for (int c = 0; c < dim; ++c)
      for (int l = 0; l < 2; ++l)
        jac_c[(static_cast<size_t>(j) * dim + c) * 2 + l] =
            bilerp(gr, [&](int idx) { return u.dvalue(idx, c, l); }, x, y);
    const double m11 = bilerp(gr, [&](int idx) { return g.a11[static_cast<size_t>(idx)]; }, x, y);
    const double m12 = bilerp(gr, [&](int idx) { return g.a12[static_cast<size_t>(idx)]; }, x, y);
    const double m22 = bilerp(gr, [&](int idx) { return g.a22[static_cast<size_t>(idx)]; }, x, y);
    met_c[static_cast<size_t>(j) * 4 + 0] = m11;
    met_c[static_cast<size_t>(j) * 4 + 1] = m12;
    met_c[static_cast<size_t>(j) * 4 + 2] = m12;
    met_c[static_cast<size_t>(j) * 4 + 3] = m22;
    for (int e = 0; e < 8; ++e)
      gam_c[static_cast<size_t>(j) * 8 + e] =
          bilerp(gr, [&](int idx) { return gam.G[static_cast<size_t>(idx) * 8 + e]; }, x, y);
  }

  // pushed-forward field and Levi-Civita side
  std::vector<std::vector<double>> uw(static_cast<size_t>(dim),
                                      std::vector<double>(static_cast<size_t>(m)));
  for (int j = 0; j < m; ++j)
    for (int c = 0; c < dim; ++c) {
      double acc = 0.0;
      for (int i = 0; i < 2; ++i)
        acc += curve.W[static_cast<size_t>(j)][i] *
               jac_c[(static_cast<size_t>(j) * dim + c) * 2 + i];
      uw[static_cast<size_t>(c)][static_cast<size_t>(j)] = acc;
    }
  std::vector<std::vector<double>> rhs(2, std::vector<double>(static_cast<size_t>(m)));
  for (int j = 0; j < m; ++j) {
    double cov[2];
    for (int i = 0; i < 2; ++i) {
      double acc = curve.dW[static_cast<size_t>(j)][i];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          acc += gam_c[static_cast<size_t>(j) * 8 + (i * 2 + a) * 2 + b] *
                 curve.dgamma[static_cast<size_t>(j)][a] * curve.W[static_cast<size_t>(j)][b];
      cov[i] = acc;
    }
    for (int l = 0; l < 2; ++l)
      rhs[static_cast<size_t>(l)][static_cast<size_t>(j)] =
          cov[0] * met_c[static_cast<size_t>(j) * 4 + l] +
          cov[1] * met_c[static_cast<size_t>(j) * 4 + 2 + l];
  }

  // three fixed smooth bumps as test functions
  const double centers[3] = {0.0, 2.0 * M_PI / 3.0, -2.0 * M_PI / 3.0};
  std::vector<PeriodicSample> tests;
  for (double c0 : centers)
    tests.push_back(sample_periodic(
        [c0](double t) { return bump_arc(wrap_pi(t - c0), 1.0); }, m / 2));

  ConnectionDefect res;
  std::vector<PeriodicSample> uw_spec, f_spec;
  std::vector<std::vector<double>> duw(static_cast<size_t>(dim));
  for (int c = 0; c < dim; ++c) {
    uw_spec.push_back(make_periodic(uw[static_cast<size_t>(c)]));
    duw[static_cast<size_t>(c)] = spectral_derivative(uw_spec.back());
  }
  const double dt = 2.0 * M_PI / m;
  for (int l = 0; l < 2; ++l) {
    // paired defect
    for (size_t ti = 0; ti < tests.size(); ++ti) {
      double lhs = 0.0;
      for (int c = 0; c < dim; ++c) {
        std::vector<double> fl(static_cast<size_t>(m));
        for (int j = 0; j < m; ++j)
          fl[static_cast<size_t>(j)] = jac_c[(static_cast<size_t>(j) * dim + c) * 2 + l];
        lhs += bilinear_pairing(make_periodic(std::move(fl)), uw_spec[static_cast<size_t>(c)],
                                tests[ti]);
      }
      double rhs_int = 0.0;
      for (int j = 0; j < m; ++j)
        rhs_int += rhs[static_cast<size_t>(l)][static_cast<size_t>(j)] *
                   tests[ti].samples[static_cast<size_t>(j)];
      rhs_int *= dt;
      res.paired = std::max(res.paired, std::fabs(lhs - rhs_int));
    }
    // pointwise defect
    for (int j = 0; j < m; ++j) {
      double lhs = 0.0;
      for (int c = 0; c < dim; ++c)
        lhs += jac_c[(static_cast<size_t>(j) * dim + c) * 2 + l] *
               duw[static_cast<size_t>(c)][static_cast<size_t>(j)];
      res.pointwise = std::max(
          res.pointwise, std::fabs(lhs - rhs[static_cast<size_t>(l)][static_cast<size_t>(j)]));
    }
  }
  return res;
}

BoundaryObservable boundary_observable(const JetField& v, double R) {
  if (!(R > 1.0)) throw ConfigError("boundary_observable: R must exceed 1");
  const double gamma = R / std::sqrt(R * R - 1.0);
  BoundaryObservable out;
  out.y_len_min = 1e300;
  double acc = 0.0;
  for (int idx : v.grid->rim_nodes()) {
    const double x1 = v.grid->x1_of(idx), x2 = v.grid->x2_of(idx);
    const double r = std::hypot(x1, x2);
    const double xh1 = x1 / r, xh2 = x2 / r;
    double dot = 0.0, len2 = 0.0;
    const double vn = std::hypot(v.value(idx, 0), v.value(idx, 1));
    for (int c = 0; c < v.dim; ++c) {
      const double yc = -(v.dvalue(idx, c, 0) * xh1 + v.dvalue(idx, c, 1) * xh2) / gamma;
      len2 += yc * yc;
      if (c == 0) dot += yc * (-v.value(idx, 0) / vn);
      if (c == 1) dot += yc * (-v.value(idx, 1) / vn);
    }
    acc += dot;
    out.y_len_min = std::min(out.y_len_min, std::sqrt(len2));
    out.y_len_max = std::max(out.y_len_max, std::sqrt(len2));
    ++out.nodes;
  }
  if (out.nodes == 0) throw ConfigError("boundary_observable: no rim nodes on this grid");
  out.value = acc / out.nodes;
  return out;
}

}  // namespace capflex
