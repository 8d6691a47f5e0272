#pragma once

#include <array>
#include <complex>
#include <functional>
#include <vector>

#include "capflex/field.hpp"

namespace capflex {

// Uniform samples of a 2*pi-periodic function at x_j = -pi + j*pi/N together
// with its Fourier coefficients fhat_k for |k| <= N (e^{ikx} convention).
struct PeriodicSample {
  int N = 0;
  std::vector<double> samples;              // 2N values
  std::vector<std::complex<double>> coeff;  // k = 0..N

  std::complex<double> fhat(int k) const {
    if (k >= 0) return coeff[static_cast<size_t>(k)];
    return std::conj(coeff[static_cast<size_t>(-k)]);
  }
  double x(int j) const { return -M_PI + M_PI * static_cast<double>(j) / N; }
};

PeriodicSample make_periodic(std::vector<double> samples);
PeriodicSample sample_periodic(const std::function<double(double)>& f, int N);
// Extensions of a function given on [0, pi] to the circle.
PeriodicSample even_reflection(const std::function<double(double)>& f, int N);
PeriodicSample zero_extension(const std::function<double(double)>& f, int N);

// Inverse transform back to samples; max |round trip - samples|.
std::vector<double> synthesize(const PeriodicSample& f);
double roundtrip_error(const PeriodicSample& f);
// Samples of f' by spectral differentiation.
std::vector<double> spectral_derivative(const PeriodicSample& f);

// Truncated double Fourier sum for int f g' phi over [-pi, pi].  Throws
// ImaginaryResidue if the imaginary part survives beyond rounding.
double bilinear_pairing(const PeriodicSample& f, const PeriodicSample& g,
                        const PeriodicSample& phi);

// Periodic Holder norm estimate from the sample grid: k = 0 gives
// sup + [.]_alpha, k = 1 adds the spectral derivative and its seminorm.
double holder_norm_periodic(const PeriodicSample& f, int k, double alpha);

// |pairing| / (||f||_a ||g||_a ||phi||_{1,a}).
double estimate_ratio(const PeriodicSample& f, const PeriodicSample& g,
                      const PeriodicSample& phi, double alpha);

// Ratio of the lacunary family f = g = sum_{j<=J} 2^{-alpha j} cos(2^j x)
// against a fixed smooth bump test function, for J = j_min..j_max.
std::vector<double> lacunary_ratio_sweep(double alpha, int j_min, int j_max, int N);

// Christoffel symbols of a metric field by finite differences.
struct ChristoffelField {
  GridPtr grid;
  std::vector<double> G;  // node*8, layout [i][j][k]

  double get(int idx, int i, int j, int k) const {
    return G[(static_cast<size_t>(idx) * 2 + i) * 4 + j * 2 + k];
  }
  double* at(int idx) { return &G[static_cast<size_t>(idx) * 8]; }
};

ChristoffelField christoffel(const MetricField& g);

// Closed curve inside the disk with a C^1 vector field along it, sampled at
// 2N uniform parameter values.
struct CurveData {
  std::vector<double> t;
  std::vector<std::array<double, 2>> gamma, dgamma, W, dW;
};

// Circle of the given radius with W = the tangent field.
CurveData make_circle_curve(double radius, int N);

// Gap in the compatibility identity between the ambient derivative of the
// pushed-forward field and the Levi-Civita side, along the curve.
// `paired` tests the gap against three fixed smooth bumps through the
// spectral pairing; `pointwise` is the direct sup of the same residual.
struct ConnectionDefect {
  double paired = 0.0;
  double pointwise = 0.0;
};

ConnectionDefect connection_defect(const JetField& u, const MetricField& g,
                                   const CurveData& curve);

// Rim observable: average over the exact boundary nodes of <Y, Z> with
// Y = v_*X for the inward metric-unit radial vector X and
// Z = -(v1, v2, 0, ...)/|(v1, v2)|.
struct BoundaryObservable {
  double value = 0.0;
  double y_len_min = 0.0;
  double y_len_max = 0.0;
  int nodes = 0;
};

BoundaryObservable boundary_observable(const JetField& v, double R);

}  // namespace capflex
