#include "vsglight/unproject.h"

#include "vsglight/parallel.h"

namespace vsg {

FeatureGrid unproject_visible(const VsgVolume& volume, const Image& image,
                              const SurfaceBuffers& surf, const Camera& camera,
                              double depth_sigma) {
  surf.validate();
  camera.validate();
  if (image.width != surf.width() || image.height != surf.height() || image.channels != 3)
    throw ValidationError("image and surface buffers disagree");
  if (surf.width() != camera.width || surf.height() != camera.height)
    throw ValidationError("surface buffers and camera resolution disagree");

  FeatureGrid grid;
  grid.nx = volume.nx;
  grid.ny = volume.ny;
  grid.nz = volume.nz;
  grid.data.assign(volume.voxel_count() * 9, 0.0);

  parallel_for(volume.voxel_count(), [&](int64_t vi) {
    int x = int(vi % volume.nx);
    int y = int((vi / volume.nx) % volume.ny);
    int z = int(vi / (int64_t(volume.nx) * volume.ny));
    Camera::Projection pr = camera.project(volume.voxel_center(x, y, z));
    if (!pr.in_front || !pr.in_image) return;
    double observed = bilinear(surf.depth, pr.u, pr.v, 0);
    double dd = pr.distance - observed;
    double k = std::exp(-dd * dd / (2.0 * depth_sigma * depth_sigma));
    Vec3 rgb = bilinear_rgb(image, pr.u, pr.v);
    Vec3 n = bilinear_rgb(surf.normal, pr.u, pr.v);
    double len = length(n);
    n = len > 0.0 ? n / len : Vec3{0, 0, 0};
    Vec3 a = bilinear_rgb(surf.albedo, pr.u, pr.v);
    double* dst = &grid.data[vi * 9];
    dst[0] = k * rgb.x;
    dst[1] = k * rgb.y;
    dst[2] = k * rgb.z;
    dst[3] = k * n.x;
    dst[4] = k * n.y;
    dst[5] = k * n.z;
    dst[6] = k * a.x;
    dst[7] = k * a.y;
    dst[8] = k * a.z;
  });
  return grid;
}

}  // namespace vsg
