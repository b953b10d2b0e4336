#pragma once

#include <cstdint>
#include <vector>

#include "vsglight/math.h"
#include "vsglight/sg.h"

namespace vsg {

// Stored channel order of one voxel record.
enum VolumeChannel : int {
  kChAlpha = 0,
  kChColorR = 1,
  kChColorG = 2,
  kChColorB = 3,
  kChAxisX = 4,
  kChAxisY = 5,
  kChAxisZ = 6,
  kChSigmaRaw = 7,
};
inline constexpr int kVolumeChannels = 8;

enum class SampleMode { kNearest, kTrilinear };

// Decoded view of one grid sample: opacity plus the emission lobe.
struct VoxelRecord {
  double alpha = 0.0;
  SphericalGaussian sg;
};

// Regular voxel grid over an axis-aligned box. Channels are interleaved per
// voxel; linear index order is x fastest, then y, then z. Opacity is stored
// decoded in [0, 1]; the lobe bandwidth is stored raw (see sigma_from_raw).
struct VsgVolume {
  int nx = 0, ny = 0, nz = 0;
  AABB bounds;
  std::vector<double> data;

  static VsgVolume zeros(int nx, int ny, int nz, const AABB& bounds);
  // Library default: a 6.4 m axis-aligned cube centered on the camera,
  // 5 cm voxels at the default 128^3 resolution.
  static AABB default_bounds(const Vec3& camera_position);

  int64_t voxel_count() const { return int64_t(nx) * ny * nz; }
  int64_t index(int x, int y, int z) const { return (int64_t(z) * ny + y) * nx + x; }
  double& at(int x, int y, int z, int ch) { return data[index(x, y, z) * kVolumeChannels + ch]; }
  double at(int x, int y, int z, int ch) const {
    return data[index(x, y, z) * kVolumeChannels + ch];
  }

  Vec3 voxel_size() const {
    Vec3 e = bounds.extent();
    return {e.x / nx, e.y / ny, e.z / nz};
  }
  Vec3 voxel_center(int x, int y, int z) const {
    Vec3 h = voxel_size();
    return {bounds.min.x + (x + 0.5) * h.x, bounds.min.y + (y + 0.5) * h.y,
            bounds.min.z + (z + 0.5) * h.z};
  }

  VoxelRecord record(int64_t idx) const {
    const double* v = &data[idx * kVolumeChannels];
    return {v[kChAlpha],
            {{v[kChColorR], v[kChColorG], v[kChColorB]},
             {v[kChAxisX], v[kChAxisY], v[kChAxisZ]},
             sigma_from_raw(v[kChSigmaRaw])}};
  }
  void set_record(int x, int y, int z, double alpha, const Vec3& color, const Vec3& axis_raw,
                  double sigma_raw);

  // Checks opacity range, color nonnegativity, and finiteness everywhere.
  void validate() const;
};

// Interpolation stencil at a query point: corner indices with weights (one
// corner in nearest mode) and the spatial gradient of each weight, used when
// gradients must flow into the query position. Points outside the bounds get
// an empty stencil (inside = false) and read as fully transparent.
struct GridStencil {
  int count = 0;
  bool inside = false;
  int64_t idx[8] = {};
  double w[8] = {};
  Vec3 dw[8] = {};
};

GridStencil grid_stencil(const VsgVolume& volume, const Vec3& p, SampleMode mode,
                         bool with_spatial_grad = false);

// Decoded sample at p. Trilinear mode interpolates all eight stored channels
// from the surrounding voxel centers (edge values replicate past the last
// center) and decodes sigma after interpolation.
VoxelRecord sample_grid(const VsgVolume& volume, const Vec3& p, SampleMode mode);

// Raw (stored-channel) sample for the given stencil.
void sample_raw(const VsgVolume& volume, const GridStencil& st, double out[kVolumeChannels]);

}  // namespace vsg
