#pragma once

#include <vector>

#include "vsglight/image.h"
#include "vsglight/math.h"

namespace vsg {

// Hemisphere quadrature: unit directions with uniform solid-angle weight
// delta_omega = 2*pi / directions.size(). Every direction has a nonnegative
// dot product with the generating normal.
struct HemisphereQuadrature {
  std::vector<Vec3> directions;
  double delta_omega = 0.0;
};

// Deterministic tangent frame (t, b, n). Any fixed choice works; this is the
// branchless construction, stable for all unit n including the poles.
void orthonormal_basis(const Vec3& n, Vec3& t, Vec3& b);

// Golden-angle spiral lattice on the hemisphere around `normal`:
// z_i = 1 - (i + 0.5) / k, azimuth_i = i * pi * (3 - sqrt(5)).
// With `frame` null the tangent frame comes from orthonormal_basis; passing a
// frame (columns t, b, n) makes the construction exactly equivariant.
HemisphereQuadrature fibonacci_hemisphere(const Vec3& normal, int k, const Mat3* frame = nullptr);

// Per-pixel quadratures for a normal buffer, stored flat for cache-friendly
// neighbor gathering.
struct HemisphereGrid {
  int width = 0, height = 0, k = 0;
  std::vector<Vec3> directions;  // width * height * k

  const Vec3* at(int x, int y) const { return &directions[(int64_t(y) * width + x) * k]; }
};

HemisphereGrid build_hemisphere_grid(const Image& normals, int k);

// Merged direction set of pixel (x, y) and its existing 8-neighbors, in
// neighbor scan order. Duplicates are kept (identical neighboring normals
// repeat directions); the uniform weight 2*pi/count keeps the quadrature
// consistent. Interior pixels get 9k directions.
HemisphereQuadrature neighbor_shared_rays(const HemisphereGrid& grid, int x, int y);

}  // namespace vsg
