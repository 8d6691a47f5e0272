#include "capflex/normals.hpp"

#include <cmath>
#include <string>

#include "capflex/errors.hpp"
#include "capflex/holder.hpp"

namespace capflex {

std::vector<std::vector<double>> reference_frame(const JetField& u) {
  for (int idx : u.grid->masked_nodes())
    for (int c = 2; c < u.dim; ++c)
      if (std::fabs(u.value(idx, c)) > 1e-14 || std::fabs(u.dvalue(idx, c, 0)) > 1e-14 ||
          std::fabs(u.dvalue(idx, c, 1)) > 1e-14)
        throw NotPlanar("component " + std::to_string(c) + " nonzero at node " +
                        std::to_string(idx));
  std::vector<std::vector<double>> frame;
  for (int c = 2; c < u.dim; ++c) {
    std::vector<double> e(u.dim, 0.0);
    e[static_cast<size_t>(c)] = 1.0;
    frame.push_back(std::move(e));
  }
  return frame;
}

void frame_at(int dim, const double* jac, double* out, double eig_floor) {
  const int d = dim - 2;
  // Gram matrix of the tangent vectors
  double g11 = 0.0, g12 = 0.0, g22 = 0.0;
  for (int c = 0; c < dim; ++c) {
    g11 += jac[c * 2 + 0] * jac[c * 2 + 0];
    g12 += jac[c * 2 + 0] * jac[c * 2 + 1];
    g22 += jac[c * 2 + 1] * jac[c * 2 + 1];
  }
  const double tr = g11 + g22, det = g11 * g22 - g12 * g12;
  const double mineig = tr / 2.0 - std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  if (mineig < eig_floor) throw DegenerateGram("gram eigenvalue " + std::to_string(mineig));
  const double inv11 = g22 / det, inv12 = -g12 / det, inv22 = g11 / det;
  // nu_i = e_{i+2} - (r1 d1v + r2 d2v), with (r1, r2) = b G^{-1}
  for (int i = 0; i < d; ++i) {
    const double b1 = jac[(i + 2) * 2 + 0];
    const double b2 = jac[(i + 2) * 2 + 1];
    const double r1 = b1 * inv11 + b2 * inv12;
    const double r2 = b1 * inv12 + b2 * inv22;
    double* nu = out + i * dim;
    for (int c = 0; c < dim; ++c) nu[c] = -r1 * jac[c * 2 + 0] - r2 * jac[c * 2 + 1];
    nu[i + 2] += 1.0;
  }
  // Gram-Schmidt in frame order with one re-orthogonalization pass
  for (int i = 0; i < d; ++i) {
    double* vi = out + i * dim;
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < i; ++j) {
        const double* vj = out + j * dim;
        double dot = 0.0;
        for (int c = 0; c < dim; ++c) dot += vi[c] * vj[c];
        for (int c = 0; c < dim; ++c) vi[c] -= dot * vj[c];
      }
    double norm = 0.0;
    for (int c = 0; c < dim; ++c) norm += vi[c] * vi[c];
    norm = std::sqrt(norm);
    if (norm < 0.25) throw DegenerateGram("frame vector collapsed, norm " + std::to_string(norm));
    for (int c = 0; c < dim; ++c) vi[c] /= norm;
  }
}

NormalFrame perturbed_frame(const JetField& u, const JetField& v, double rho0,
                            int pair_budget, uint64_t seed) {
  if (u.dim != v.dim) throw ConfigError("perturbed_frame: dimension mismatch");
  JetField diff(v.grid, v.dim);
  for (size_t i = 0; i < diff.values.size(); ++i) diff.values[i] = v.values[i] - u.values[i];
  for (size_t i = 0; i < diff.jac.size(); ++i) diff.jac[i] = v.jac[i] - u.jac[i];
  const double dist = holder_norm(diff, 1, 0.0, pair_budget, seed);
  if (dist >= rho0)
    throw TooFar("||v - u||_1 = " + std::to_string(dist) + " >= rho0 = " +
                 std::to_string(rho0));
  NormalFrame frame;
  frame.grid = v.grid;
  frame.dim = v.dim;
  frame.d = v.dim - 2;
  frame.xi.assign(static_cast<size_t>(v.grid->size()) * frame.d * frame.dim, 0.0);
  for (int idx : v.grid->masked_nodes())
    frame_at(v.dim, &v.jac[static_cast<size_t>(idx) * v.dim * 2], frame.at(idx));
  return frame;
}

FrameQuality frame_quality(const NormalFrame& frame, const JetField& v) {
  FrameQuality q;
  for (int idx : frame.grid->masked_nodes()) {
    for (int i = 0; i < frame.d; ++i) {
      for (int j = i; j < frame.d; ++j) {
        double dot = 0.0;
        for (int c = 0; c < frame.dim; ++c) dot += frame.get(idx, i, c) * frame.get(idx, j, c);
        q.orthonormality = std::max(q.orthonormality, std::fabs(dot - (i == j ? 1.0 : 0.0)));
      }
      for (int k = 0; k < 2; ++k) {
        double dot = 0.0;
        for (int c = 0; c < frame.dim; ++c) dot += frame.get(idx, i, c) * v.dvalue(idx, c, k);
        q.tangency = std::max(q.tangency, std::fabs(dot));
      }
    }
  }
  return q;
}

}  // namespace capflex
