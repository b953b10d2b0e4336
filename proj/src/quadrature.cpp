#include "vsglight/quadrature.h"

namespace vsg {

void orthonormal_basis(const Vec3& n, Vec3& t, Vec3& b) {
  double s = std::copysign(1.0, n.z);
  double a = -1.0 / (s + n.z);
  double c = n.x * n.y * a;
  t = {1.0 + s * n.x * n.x * a, s * c, -s * n.x};
  b = {c, s + n.y * n.y * a, -n.y};
}

HemisphereQuadrature fibonacci_hemisphere(const Vec3& normal, int k, const Mat3* frame) {
  if (k < 1) throw ValidationError("quadrature needs at least one direction");
  Vec3 n = normalized(normal);
  Vec3 t, b;
  if (frame) {
    t = frame->col(0);
    b = frame->col(1);
    n = frame->col(2);
  } else {
    orthonormal_basis(n, t, b);
  }
  const double kGoldenAngle = M_PI * (3.0 - std::sqrt(5.0));
  HemisphereQuadrature q;
  q.directions.resize(k);
  q.delta_omega = 2.0 * M_PI / k;
  for (int i = 0; i < k; ++i) {
    double z = 1.0 - (i + 0.5) / k;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = i * kGoldenAngle;
    q.directions[i] = t * (r * std::cos(phi)) + b * (r * std::sin(phi)) + n * z;
  }
  return q;
}

HemisphereGrid build_hemisphere_grid(const Image& normals, int k) {
  if (normals.channels != 3) throw ValidationError("normal buffer must have 3 channels");
  HemisphereGrid grid;
  grid.width = normals.width;
  grid.height = normals.height;
  grid.k = k;
  grid.directions.resize(int64_t(normals.width) * normals.height * k);
  for (int y = 0; y < normals.height; ++y)
    for (int x = 0; x < normals.width; ++x) {
      HemisphereQuadrature q = fibonacci_hemisphere(normals.rgb(x, y), k);
      std::copy(q.directions.begin(), q.directions.end(),
                grid.directions.begin() + (int64_t(y) * grid.width + x) * k);
    }
  return grid;
}

HemisphereQuadrature neighbor_shared_rays(const HemisphereGrid& grid, int x, int y) {
  HemisphereQuadrature q;
  q.directions.reserve(9 * grid.k);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      int nx = x + dx, ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= grid.width || ny >= grid.height) continue;
      const Vec3* src = grid.at(nx, ny);
      q.directions.insert(q.directions.end(), src, src + grid.k);
    }
  q.delta_omega = 2.0 * M_PI / double(q.directions.size());
  return q;
}

}  // namespace vsg
