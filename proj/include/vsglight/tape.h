#pragma once

#include <vector>

#include "vsglight/image.h"
#include "vsglight/volume.h"

namespace vsg {

// Reverse-mode gradient accumulator. Volume gradients are kept with respect
// to the STORED channels (alpha, color, axis_raw, sigma_raw): that is what a
// finite difference of the in-memory representation measures. The fitting
// parameterization (alpha as a logit) is a per-voxel chain rule on top,
// provided by raw_volume_grad. Surface-buffer gradients are per pixel.
struct GradientTape {
  int nx = 0, ny = 0, nz = 0;
  std::vector<double> d_volume;  // voxel-major, kVolumeChannels per voxel

  Image d_albedo;  // 3 channels
  Image d_normal;  // 3 channels, w.r.t. the stored (pre-normalization) normal
  Image d_depth;   // 1 channel

  static GradientTape for_volume(const VsgVolume& v) {
    GradientTape t;
    t.nx = v.nx;
    t.ny = v.ny;
    t.nz = v.nz;
    t.d_volume.assign(v.voxel_count() * kVolumeChannels, 0.0);
    return t;
  }
  static GradientTape for_problem(const VsgVolume& v, int surf_w, int surf_h) {
    GradientTape t = for_volume(v);
    t.d_albedo = Image::zeros(surf_w, surf_h, 3);
    t.d_normal = Image::zeros(surf_w, surf_h, 3);
    t.d_depth = Image::zeros(surf_w, surf_h, 1);
    return t;
  }

  double& dv(int64_t voxel, int ch) { return d_volume[voxel * kVolumeChannels + ch]; }
  double dv(int64_t voxel, int ch) const { return d_volume[voxel * kVolumeChannels + ch]; }

  void add_scaled(const GradientTape& o, double s) {
    for (size_t i = 0; i < d_volume.size(); ++i) d_volume[i] += s * o.d_volume[i];
    for (size_t i = 0; i < d_albedo.data.size(); ++i) d_albedo.data[i] += s * o.d_albedo.data[i];
    for (size_t i = 0; i < d_normal.data.size(); ++i) d_normal.data[i] += s * o.d_normal.data[i];
    for (size_t i = 0; i < d_depth.data.size(); ++i) d_depth.data[i] += s * o.d_depth.data[i];
  }

  // Gradient w.r.t. the fitting parameterization: opacity as a logit
  // (d_logit = d_alpha * a * (1 - a)); all other channels are stored raw
  // already. Layout matches d_volume.
  std::vector<double> raw_volume_grad(const VsgVolume& v) const {
    std::vector<double> g = d_volume;
    for (int64_t i = 0; i < int64_t(v.voxel_count()); ++i) {
      double a = v.data[i * kVolumeChannels + kChAlpha];
      g[i * kVolumeChannels + kChAlpha] *= a * (1.0 - a);
    }
    return g;
  }

  // Gradient w.r.t. the per-voxel decoded bandwidth (sigma rather than
  // sigma_raw); the remaining channels are unchanged views of d_volume.
  double d_sigma_decoded(const VsgVolume& v, int64_t voxel) const {
    double sraw = v.data[voxel * kVolumeChannels + kChSigmaRaw];
    return dv(voxel, kChSigmaRaw) / sigma_from_raw_derivative(sraw);
  }
};

}  // namespace vsg
