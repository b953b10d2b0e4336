#include "vsglight/volume.h"

#include <cmath>

namespace vsg {

VsgVolume VsgVolume::zeros(int nx, int ny, int nz, const AABB& bounds) {
  if (nx < 1 || ny < 1 || nz < 1) throw ValidationError("volume dimensions must be positive");
  Vec3 e = bounds.extent();
  if (!(e.x > 0 && e.y > 0 && e.z > 0)) throw ValidationError("volume bounds must have positive extent");
  VsgVolume v;
  v.nx = nx;
  v.ny = ny;
  v.nz = nz;
  v.bounds = bounds;
  v.data.assign(int64_t(nx) * ny * nz * kVolumeChannels, 0.0);
  return v;
}

AABB VsgVolume::default_bounds(const Vec3& camera_position) {
  Vec3 half{3.2, 3.2, 3.2};
  return {camera_position - half, camera_position + half};
}

void VsgVolume::set_record(int x, int y, int z, double alpha, const Vec3& color,
                           const Vec3& axis_raw, double sigma_raw) {
  double* v = &data[index(x, y, z) * kVolumeChannels];
  v[kChAlpha] = alpha;
  v[kChColorR] = color.x;
  v[kChColorG] = color.y;
  v[kChColorB] = color.z;
  v[kChAxisX] = axis_raw.x;
  v[kChAxisY] = axis_raw.y;
  v[kChAxisZ] = axis_raw.z;
  v[kChSigmaRaw] = sigma_raw;
}

void VsgVolume::validate() const {
  for (int64_t i = 0; i < voxel_count(); ++i) {
    const double* v = &data[i * kVolumeChannels];
    for (int c = 0; c < kVolumeChannels; ++c)
      if (!std::isfinite(v[c]))
        throw ValidationError("volume voxel " + std::to_string(i) + " channel " +
                              std::to_string(c) + " is not finite");
    if (v[kChAlpha] < 0.0 || v[kChAlpha] > 1.0)
      throw ValidationError("volume voxel " + std::to_string(i) + " opacity outside [0, 1]");
    if (v[kChColorR] < 0.0 || v[kChColorG] < 0.0 || v[kChColorB] < 0.0)
      throw ValidationError("volume voxel " + std::to_string(i) + " has negative color");
  }
}

GridStencil grid_stencil(const VsgVolume& volume, const Vec3& p, SampleMode mode,
                         bool with_spatial_grad) {
  GridStencil st;
  if (!volume.bounds.contains(p)) return st;
  st.inside = true;
  Vec3 h = volume.voxel_size();
  // Continuous voxel-center coordinates: center i sits at u = i.
  double u[3] = {(p.x - volume.bounds.min.x) / h.x - 0.5,
                 (p.y - volume.bounds.min.y) / h.y - 0.5,
                 (p.z - volume.bounds.min.z) / h.z - 0.5};
  const int dims[3] = {volume.nx, volume.ny, volume.nz};

  if (mode == SampleMode::kNearest) {
    int c[3];
    for (int a = 0; a < 3; ++a) {
      long long r = std::llround(u[a]);
      c[a] = int(std::min<long long>(std::max<long long>(r, 0), dims[a] - 1));
    }
    st.count = 1;
    st.idx[0] = volume.index(c[0], c[1], c[2]);
    st.w[0] = 1.0;
    return st;
  }

  int i0[3];
  double f[3], dfdu[3];
  for (int a = 0; a < 3; ++a) {
    if (dims[a] == 1) {
      i0[a] = 0;
      f[a] = 0.0;
      dfdu[a] = 0.0;
      continue;
    }
    double uc = clamp(u[a], 0.0, double(dims[a] - 1));
    int i = std::min(int(std::floor(uc)), dims[a] - 2);
    i0[a] = i;
    f[a] = uc - i;
    // Replicated past the outermost centers: the fraction clamps, so the
    // spatial derivative vanishes there.
    dfdu[a] = (u[a] > 0.0 && u[a] < double(dims[a] - 1)) ? 1.0 : 0.0;
  }

  st.count = 8;
  for (int k = 0; k < 8; ++k) {
    int dx = k & 1, dy = (k >> 1) & 1, dz = (k >> 2) & 1;
    double wx = dx ? f[0] : 1.0 - f[0];
    double wy = dy ? f[1] : 1.0 - f[1];
    double wz = dz ? f[2] : 1.0 - f[2];
    st.idx[k] = volume.index(i0[0] + dx, i0[1] + dy, i0[2] + dz);
    st.w[k] = wx * wy * wz;
    if (with_spatial_grad) {
      double sx = dx ? 1.0 : -1.0, sy = dy ? 1.0 : -1.0, sz = dz ? 1.0 : -1.0;
      st.dw[k] = {sx * wy * wz * dfdu[0] / h.x, wx * sy * wz * dfdu[1] / h.y,
                  wx * wy * sz * dfdu[2] / h.z};
    }
  }
  return st;
}

void sample_raw(const VsgVolume& volume, const GridStencil& st, double out[kVolumeChannels]) {
  for (int c = 0; c < kVolumeChannels; ++c) out[c] = 0.0;
  for (int k = 0; k < st.count; ++k) {
    const double* v = &volume.data[st.idx[k] * kVolumeChannels];
    for (int c = 0; c < kVolumeChannels; ++c) out[c] += st.w[k] * v[c];
  }
}

VoxelRecord sample_grid(const VsgVolume& volume, const Vec3& p, SampleMode mode) {
  GridStencil st = grid_stencil(volume, p, mode);
  if (!st.inside) return {};
  double raw[kVolumeChannels];
  sample_raw(volume, st, raw);
  return {raw[kChAlpha],
          {{raw[kChColorR], raw[kChColorG], raw[kChColorB]},
           {raw[kChAxisX], raw[kChAxisY], raw[kChAxisZ]},
           sigma_from_raw(raw[kChSigmaRaw])}};
}

}  // namespace vsg
