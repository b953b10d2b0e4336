#pragma once

#include "vsglight/camera.h"
#include "vsglight/image.h"
#include "vsglight/volume.h"

namespace vsg {

// Per-voxel observation features lifted from one view: channel order is
// k * image RGB (3), k * normal (3), k * albedo (3), where k weights by how
// close the voxel center lies to the observed surface along the view ray.
struct FeatureGrid {
  int nx = 0, ny = 0, nz = 0;
  std::vector<double> data;  // 9 channels, voxel-major, same index order as VsgVolume

  int64_t index(int x, int y, int z) const { return (int64_t(z) * ny + y) * nx + x; }
  double& at(int x, int y, int z, int c) { return data[index(x, y, z) * 9 + c]; }
  double at(int x, int y, int z, int c) const { return data[index(x, y, z) * 9 + c]; }
};

inline constexpr double kDepthSigma = 0.15;  // meters

// Projects every voxel center into the view; voxels landing inside the image
// and in front of the camera get features weighted by
// k = exp(-(d - D)^2 / (2 sigma_d^2)) with d the voxel's distance to the
// camera and D the bilinearly sampled observed depth. Normals are sampled
// bilinearly and renormalized. All other voxels get zero features.
FeatureGrid unproject_visible(const VsgVolume& volume, const Image& image,
                              const SurfaceBuffers& surf, const Camera& camera,
                              double depth_sigma = kDepthSigma);

}  // namespace vsg
