#pragma once

#include "vsglight/camera.h"
#include "vsglight/tape.h"
#include "vsglight/volume.h"

namespace vsg {

struct CompositeConfig {
  int n_samples = 128;
  SampleMode mode = SampleMode::kTrilinear;
  // One sample at the midpoint of every voxel segment the ray crosses,
  // instead of n_samples equi-spaced ones. Forward-only oracle mode (the
  // backward passes reject it); pairs naturally with nearest indexing.
  bool sample_per_voxel = false;
};

// Front-to-back emission-absorption along the ray: n_samples midpoint samples
// between the ray's entry into and exit from volume.bounds, each contributing
// transmittance * alpha * sg_eval(-direction). Rays that miss return zero.
Vec3 composite_radiance(const VsgVolume& volume, const Ray& ray, const CompositeConfig& cfg);

// Same walk with each sample contributing its metric distance from
// ray.origin; residual transmittance contributes the bounds-exit distance.
double composite_depth(const VsgVolume& volume, const Ray& ray, const CompositeConfig& cfg);

// Lobe-free variant: every sample emits its stored color with no directional
// falloff. Reference for the wide-lobe limit of composite_radiance.
Vec3 composite_rgba(const VsgVolume& volume, const Ray& ray, const CompositeConfig& cfg);

// Reverse-mode pass for composite_radiance: accumulates d_out . d(output)/d*
// into the tape (stored-channel space) and, when d_origin is non-null, the
// gradient with respect to the ray origin (trilinear spatial derivatives;
// zero almost everywhere in nearest mode, reported as zero).
void composite_radiance_backward(const VsgVolume& volume, const Ray& ray,
                                 const CompositeConfig& cfg, const Vec3& d_out,
                                 GradientTape& tape, Vec3* d_origin = nullptr);

// Reverse-mode pass for composite_depth (volume gradients only; sample
// depths do not depend on the volume).
void composite_depth_backward(const VsgVolume& volume, const Ray& ray,
                              const CompositeConfig& cfg, double d_out, GradientTape& tape);

}  // namespace vsg
