#include "capflex/export.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "capflex/errors.hpp"

namespace capflex {

namespace {

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void export_mesh(const JetField& f, const std::array<int, 3>& coords,
                 const std::string& path, int stride) {
  const Grid& g = *f.grid;
  for (int c : coords)
    if (c < 0 || c >= f.dim) throw ConfigError("mesh component out of range");
  if (stride < 1) throw ConfigError("mesh stride must be >= 1");

  // decimated lattice: m x m sample points, node (jx, jy) -> grid (jx*stride, jy*stride)
  const int m = (g.n - 1) / stride + 1;
  std::vector<int> vertex_id(static_cast<size_t>(m) * m, -1);
  std::vector<int> vertex_idx;
  for (int jy = 0; jy < m; ++jy)
    for (int jx = 0; jx < m; ++jx) {
      const int idx = (jy * stride) * g.n + jx * stride;
      if (!g.masked(idx)) continue;
      vertex_id[static_cast<size_t>(jy) * m + jx] = static_cast<int>(vertex_idx.size());
      vertex_idx.push_back(idx);
    }

  std::vector<std::array<int, 3>> faces;
  for (int jy = 0; jy + 1 < m; ++jy)
    for (int jx = 0; jx + 1 < m; ++jx) {
      const int v00 = vertex_id[static_cast<size_t>(jy) * m + jx];
      const int v10 = vertex_id[static_cast<size_t>(jy) * m + jx + 1];
      const int v01 = vertex_id[static_cast<size_t>(jy + 1) * m + jx];
      const int v11 = vertex_id[static_cast<size_t>(jy + 1) * m + jx + 1];
      if (v00 < 0 || v10 < 0 || v01 < 0 || v11 < 0) continue;
      faces.push_back({v00, v10, v11});
      faces.push_back({v00, v11, v01});
    }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << vertex_idx.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "element face " << faces.size() << "\n";
  out << "property list uchar int vertex_indices\nend_header\n";
  for (int idx : vertex_idx)
    out << fmt9(f.value(idx, coords[0])) << ' ' << fmt9(f.value(idx, coords[1])) << ' '
        << fmt9(f.value(idx, coords[2])) << '\n';
  for (const auto& fc : faces) out << "3 " << fc[0] << ' ' << fc[1] << ' ' << fc[2] << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

RimSpectrum rim_trace_spectrum(const JetField& f, int coord, double radius, int samples) {
  const Grid& g = *f.grid;
  if (coord < 0 || coord >= f.dim) throw ConfigError("trace component out of range");
  if (samples < 8) throw ConfigError("trace needs at least 8 samples");
  if (!(radius > 0.0 && radius < 1.0)) throw ConfigError("trace radius must be in ]0,1[");

  std::vector<double> trace(static_cast<size_t>(samples));
  double mean = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double th = 2.0 * M_PI * s / samples;
    const double x1 = radius * std::cos(th), x2 = radius * std::sin(th);
    const double fx = (x1 + 1.0) / g.spacing, fy = (x2 + 1.0) / g.spacing;
    const int ix = std::clamp(static_cast<int>(std::floor(fx)), 0, g.n - 2);
    const int iy = std::clamp(static_cast<int>(std::floor(fy)), 0, g.n - 2);
    const double tx = fx - ix, ty = fy - iy;
    const int idx = iy * g.n + ix;
    const double v = (1 - tx) * (1 - ty) * f.value(idx, coord) +
                     tx * (1 - ty) * f.value(idx + 1, coord) +
                     (1 - tx) * ty * f.value(idx + g.n, coord) +
                     tx * ty * f.value(idx + g.n + 1, coord);
    trace[static_cast<size_t>(s)] = v;
    mean += v;
  }
  mean /= samples;
  for (double& v : trace) v -= mean;

  std::vector<fftw_complex> spec(static_cast<size_t>(samples / 2 + 1));
  fftw_plan plan = fftw_plan_dft_r2c_1d(samples, trace.data(), spec.data(), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  RimSpectrum best;
  for (int k = 1; k <= samples / 2; ++k) {
    const double mag = std::hypot(spec[static_cast<size_t>(k)][0],
                                  spec[static_cast<size_t>(k)][1]) * 2.0 / samples;
    if (mag > best.amplitude) {
      best.amplitude = mag;
      best.frequency = k;
    }
  }
  return best;
}

}  // namespace capflex
