#pragma once

#include <array>
#include <string>

#include "capflex/field.hpp"

namespace capflex {

// Writes the map restricted to three components as an ASCII PLY surface.
// Vertices are the masked nodes of the (stride-decimated) lattice, faces the
// quads whose four corners are masked, split into two triangles.  The output
// is deterministic byte-for-byte for identical inputs.
void export_mesh(const JetField& f, const std::array<int, 3>& coords,
                 const std::string& path, int stride = 1);

// Samples one component along the circle of the given radius (bilinear
// interpolation), removes the mean, and returns the angular frequency with
// the largest FFT magnitude together with that magnitude.
struct RimSpectrum {
  int frequency = 0;
  double amplitude = 0.0;
};
RimSpectrum rim_trace_spectrum(const JetField& f, int coord, double radius = 0.95,
                               int samples = 4096);

}  // namespace capflex
