#include "capflex/mollify.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>

#include "capflex/errors.hpp"

namespace capflex {

Kernel make_kernel(double ell, double spacing) {
  if (ell <= 0.0 || spacing <= 0.0) throw ConfigError("make_kernel: ell and spacing > 0");
  Kernel k;
  k.ell = ell;
  k.spacing = spacing;
  k.radius = static_cast<int>(std::ceil(ell / spacing));
  const int side = 2 * k.radius + 1;
  k.w.assign(static_cast<size_t>(side) * side, 0.0);
  double sum = 0.0;
  for (int j = -k.radius; j <= k.radius; ++j)
    for (int i = -k.radius; i <= k.radius; ++i) {
      const double r = spacing * std::hypot(i, j) / ell;
      if (r < 1.0) {
        const double v = std::exp(-1.0 / (1.0 - r * r));
        k.w[static_cast<size_t>(j + k.radius) * side + (i + k.radius)] = v;
        sum += v;
      }
    }
  for (double& v : k.w) v /= sum;
  return k;
}

namespace {

int next_fast_size(int n) {
  for (int s = n;; ++s) {
    int m = s;
    for (int p : {2, 3, 5})
      while (m % p == 0) m /= p;
    if (m == 1) return s;
  }
}

std::mutex fftw_mutex;  // FFTW planning is not thread-safe

// Zero-padded linear convolution of an n x n array with the kernel, FFT based.
struct FftConv {
  int n = 0, P = 0;
  std::vector<double> pad;
  std::vector<std::complex<double>> khat, fhat;
  fftw_plan fwd = nullptr, bwd = nullptr;

  FftConv(int n_, const Kernel& k) : n(n_) {
    P = next_fast_size(n + 2 * k.radius + 1);
    const int nc = P * (P / 2 + 1);
    pad.assign(static_cast<size_t>(P) * P, 0.0);
    khat.assign(nc, 0.0);
    fhat.assign(nc, 0.0);
    {
      std::lock_guard<std::mutex> lock(fftw_mutex);
      fwd = fftw_plan_dft_r2c_2d(P, P, pad.data(),
                                 reinterpret_cast<fftw_complex*>(fhat.data()),
                                 FFTW_ESTIMATE);
      bwd = fftw_plan_dft_c2r_2d(P, P, reinterpret_cast<fftw_complex*>(fhat.data()),
                                 pad.data(), FFTW_ESTIMATE);
    }
    // kernel, wrapped so that offset (i,j) lands at ((i+P)%P, (j+P)%P)
    const int side = 2 * k.radius + 1;
    for (int j = -k.radius; j <= k.radius; ++j)
      for (int i = -k.radius; i <= k.radius; ++i) {
        const double w = k.w[static_cast<size_t>(j + k.radius) * side + (i + k.radius)];
        const int jj = (j + P) % P, ii = (i + P) % P;
        pad[static_cast<size_t>(jj) * P + ii] = w;
      }
    fftw_execute(fwd);
    khat = fhat;
  }

  ~FftConv() {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }

  void apply(const double* in, double* out) {
    std::fill(pad.begin(), pad.end(), 0.0);
    for (int j = 0; j < n; ++j)
      std::memcpy(&pad[static_cast<size_t>(j) * P], in + static_cast<size_t>(j) * n,
                  sizeof(double) * n);
    fftw_execute(fwd);
    const double scale = 1.0 / (static_cast<double>(P) * P);
    for (size_t i = 0; i < fhat.size(); ++i) fhat[i] *= khat[i] * scale;
    fftw_execute(bwd);
    for (int j = 0; j < n; ++j)
      std::memcpy(out + static_cast<size_t>(j) * n, &pad[static_cast<size_t>(j) * P],
                  sizeof(double) * n);
  }
};

void convolve_direct(const double* in, double* out, int n, const Kernel& k) {
  const int side = 2 * k.radius + 1;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int j = -k.radius; j <= k.radius; ++j) {
        const int yy = y - j;
        if (yy < 0 || yy >= n) continue;
        for (int i = -k.radius; i <= k.radius; ++i) {
          const int xx = x - i;
          if (xx < 0 || xx >= n) continue;
          acc += k.w[static_cast<size_t>(j + k.radius) * side + (i + k.radius)] *
                 in[static_cast<size_t>(yy) * n + xx];
        }
      }
      out[static_cast<size_t>(y) * n + x] = acc;
    }
}

void check_rim_support(const Grid& g, const double* data, int stride, int count,
                       double ell) {
  const double lim = 1.0 - ell;
  for (int idx = 0; idx < g.size(); ++idx) {
    if (g.radius_of(idx) <= lim) continue;
    for (int c = 0; c < count; ++c)
      if (std::fabs(data[static_cast<size_t>(idx) * stride + c]) > 1e-13)
        throw SupportViolation("nonzero input within ell of the rim at node " +
                               std::to_string(idx));
  }
}

// Convolve `count` interleaved components with stride `stride`.
void convolve_components(const Grid& g, const double* in, double* out, int stride,
                         int count, const Kernel& k) {
  const int n = g.n;
  std::vector<double> a(static_cast<size_t>(n) * n), b(static_cast<size_t>(n) * n);
  std::unique_ptr<FftConv> fft;
  if (k.radius > 4) fft = std::make_unique<FftConv>(n, k);
  for (int c = 0; c < count; ++c) {
    for (int idx = 0; idx < n * n; ++idx)
      a[static_cast<size_t>(idx)] = in[static_cast<size_t>(idx) * stride + c];
    if (fft)
      fft->apply(a.data(), b.data());
    else
      convolve_direct(a.data(), b.data(), n, k);
    for (int idx = 0; idx < n * n; ++idx)
      out[static_cast<size_t>(idx) * stride + c] = b[static_cast<size_t>(idx)];
  }
}

}  // namespace

ScalarField convolve(const ScalarField& f, const Kernel& k, bool check_support) {
  if (check_support) check_rim_support(*f.grid, f.v.data(), 1, 1, k.ell);
  ScalarField out(f.grid);
  convolve_components(*f.grid, f.v.data(), out.v.data(), 1, 1, k);
  return out;
}

JetField convolve(const JetField& f, const Kernel& k, bool check_support) {
  if (check_support) check_rim_support(*f.grid, f.values.data(), f.dim, f.dim, k.ell);
  JetField out(f.grid, f.dim);
  out.analytic_jac = f.analytic_jac;
  convolve_components(*f.grid, f.values.data(), out.values.data(), f.dim, f.dim, k);
  convolve_components(*f.grid, f.jac.data(), out.jac.data(), f.dim * 2, f.dim * 2, k);
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(std::max(y[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double commutator_test(const ScalarField& f, const ScalarField& g,
                       const std::vector<double>& ell_list) {
  ScalarField prod(f.grid);
  for (int idx = 0; idx < f.grid->size(); ++idx) prod.at(idx) = f.at(idx) * g.at(idx);
  std::vector<double> errs;
  for (double ell : ell_list) {
    Kernel k = make_kernel(ell, f.grid->spacing);
    ScalarField pf = convolve(f, k), pg = convolve(g, k), pp = convolve(prod, k);
    double e = 0.0;
    for (int idx : f.grid->masked_nodes())
      e = std::max(e, std::fabs(pp.at(idx) - pf.at(idx) * pg.at(idx)));
    errs.push_back(e);
  }
  return loglog_slope(ell_list, errs);
}

double pullback_commutator_slope(const JetField& v,
                                 const std::vector<double>& eps_list) {
  const MetricField base = pullback(v);
  const auto core = v.grid->annulus(0.0, 0.5);
  std::vector<double> errs;
  for (double eps : eps_list) {
    Kernel k = make_kernel(eps, v.grid->spacing);
    JetField w = convolve(v, k, /*check_support=*/false);
    MetricField pw = pullback(w);
    // C^1 norm of the metric gap on the core ball: entries plus FD gradients
    ScalarField d11(v.grid), d12(v.grid), d22(v.grid);
    for (int idx = 0; idx < v.grid->size(); ++idx) {
      const Sym2 d = pw.at(idx) - base.at(idx);
      d11.at(idx) = d.a11;
      d12.at(idx) = d.a12;
      d22.at(idx) = d.a22;
    }
    double e = 0.0;
    for (int idx : core) {
      for (const ScalarField* s : {&d11, &d12, &d22}) {
        double gr[2];
        fd_gradient(*s, idx, gr);
        e = std::max({e, std::fabs(s->at(idx)), std::fabs(gr[0]), std::fabs(gr[1])});
      }
    }
    errs.push_back(e);
  }
  return loglog_slope(eps_list, errs);
}

}  // namespace capflex
