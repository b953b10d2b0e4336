#pragma once

#include "vsglight/camera.h"
#include "vsglight/compositing.h"
#include "vsglight/image.h"
#include "vsglight/quadrature.h"
#include "vsglight/tape.h"

namespace vsg {

inline constexpr double kSoftClipKnee = 0.9;

// C1 range compression onto [0, 1): identity below the knee, exponential
// saturation above it. Strictly increasing with supremum 1.
inline double soft_clip(double x, double tau = kSoftClipKnee) {
  return x <= tau ? x : 1.0 - (1.0 - tau) * std::exp(-(x - tau) / (1.0 - tau));
}
inline double soft_clip_derivative(double x, double tau = kSoftClipKnee) {
  return x <= tau ? 1.0 : std::exp(-(x - tau) / (1.0 - tau));
}
inline Vec3 soft_clip(const Vec3& v, double tau = kSoftClipKnee) {
  return {soft_clip(v.x, tau), soft_clip(v.y, tau), soft_clip(v.z, tau)};
}

struct ShadeConfig {
  int quad_rays = 50;            // hemisphere directions per pixel
  bool share_neighbors = false;  // merge the 8-neighborhood's directions (9x rays)
  CompositeConfig composite;
  double tau = kSoftClipKnee;
};

struct ShadeResult {
  Image ldr;       // soft-clipped Lambertian re-render, 3 channels
  Image shading;   // pre-albedo incident sum S = sum R cos dOmega, 3 channels
  Image jacobian;  // dS/d(normal), 9 channels: [rgb * 3 + normal axis]
};

// Lambertian re-render of the observed surfaces under the volume's light
// field: pixel p at distance depth(p) along its camera ray receives
// S = sum_l R(p, l) max(l . n, 0) dOmega and emits soft_clip(albedo/pi * S).
// The Jacobian treats the cosine-clamp indicator as a constant.
ShadeResult shade_lambertian(const SurfaceBuffers& surf, const Camera& camera,
                             const VsgVolume& volume, const ShadeConfig& cfg);

// Reverse-mode pass: given d(loss)/d(ldr), accumulates volume gradients and,
// when the tape carries surface buffers, albedo/normal/depth gradients.
void shade_lambertian_backward(const SurfaceBuffers& surf, const Camera& camera,
                               const VsgVolume& volume, const ShadeConfig& cfg,
                               const Image& d_ldr, GradientTape& tape);

// Per-pixel building blocks for subsampled losses. The hemisphere grid must
// have been built from surf.normal with cfg.quad_rays directions; keeping it
// external lets callers reuse it across pixels and hold the quadrature nodes
// fixed while normals are perturbed (the Jacobian convention).
Vec3 shade_lambertian_pixel(const SurfaceBuffers& surf, const Camera& camera,
                            const VsgVolume& volume, const ShadeConfig& cfg,
                            const HemisphereGrid& grid, int x, int y);
// volume_tape receives volume gradients (callers pass a thread-local tape);
// surf_tape, when non-null, receives this pixel's albedo/normal/depth grads.
void shade_lambertian_pixel_backward(const SurfaceBuffers& surf, const Camera& camera,
                                     const VsgVolume& volume, const ShadeConfig& cfg,
                                     const HemisphereGrid& grid, int x, int y, const Vec3& d_ldr,
                                     GradientTape& volume_tape, GradientTape* surf_tape);

struct PanoramaConfig {
  int width = 256, height = 128;
  Mat3 orientation;
  CompositeConfig composite;
  bool hdr = false;  // false: soft-clipped LDR
  double tau = kSoftClipKnee;
};

// Equirectangular render of the light field from a probe position.
Image render_panorama(const VsgVolume& volume, const Vec3& position, const PanoramaConfig& cfg);

struct PerspectiveRender {
  Image rgb;    // soft-clipped unless hdr
  Image depth;  // alpha-composited ray distance, 1 channel
};

struct PerspectiveConfig {
  CompositeConfig composite;
  bool hdr = false;
  double tau = kSoftClipKnee;
};

PerspectiveRender render_perspective_from_volume(const VsgVolume& volume, const Camera& camera,
                                                 const PerspectiveConfig& cfg);

struct SphereInsertion {
  Vec3 center;
  double radius = 0.0;
  bool mirror = true;     // mirror ball; otherwise diffuse
  Vec3 albedo{0.5, 0.5, 0.5};
};

struct InsertConfig {
  int quad_rays = 128;  // shading and shadow-ratio quadrature
  CompositeConfig composite;
  double tau = kSoftClipKnee;
};

// Differential composite of a synthetic sphere into the observed image:
// sphere pixels are shaded from the light field (mirror reflection or diffuse
// quadrature); background pixels are scaled by the with/without-occlusion
// ratio of their re-shaded surface. Zero-radius or fully-behind-camera
// spheres return the input unchanged.
Image insert_sphere(const VsgVolume& volume, const Image& image, const SurfaceBuffers& surf,
                    const Camera& camera, const SphereInsertion& sphere, const InsertConfig& cfg);

}  // namespace vsg
