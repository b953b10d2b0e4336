#pragma once

#include <string>
#include <vector>

#include "vsglight/camera.h"
#include "vsglight/fit.h"
#include "vsglight/image.h"
#include "vsglight/losses.h"
#include "vsglight/volume.h"

namespace vsg {

// Axis-aligned box or sphere, either emitting (an SG lobe of HDR radiance; a
// zero lobe axis means isotropic emission) or diffuse (Lambertian albedo).
struct ScenePrimitive {
  enum class Shape { kBox, kSphere };
  enum class Role { kEmitter, kDiffuse };
  Shape shape = Shape::kBox;
  Role role = Role::kDiffuse;

  AABB box;     // kBox
  Vec3 center;  // kSphere
  double radius = 0.0;

  Vec3 radiance;           // emitters: SG lobe amplitude
  Vec3 lobe_axis;          // emitters: zero = isotropic
  double lobe_sigma = 1.0; // emitters: decoded bandwidth

  Vec3 albedo;  // diffuse surfaces
};

// Closed-form synthetic scene: the ground truth that volumes, observations,
// and surface buffers are derived from in tests.
struct AnalyticScene {
  std::vector<ScenePrimitive> primitives;
  AABB bounds;
  Camera camera;
  int shading_rays = 512;  // quadrature for single-bounce wall shading

  void validate() const;
};

struct SceneHit {
  bool hit = false;
  double t = 0.0;  // ray distance
  int prim = -1;
  Vec3 point;
  Vec3 normal;  // unit, facing the incoming ray
};

// Nearest positive primitive intersection.
SceneHit intersect_scene(const AnalyticScene& scene, const Ray& ray);

// Exitant radiance of a diffuse surface point under the scene's emitters,
// single bounce with analytic occlusion: (albedo/pi) * sum over hemisphere
// quadrature of emitter radiance toward the point times cosine.
Vec3 shade_surface_point(const AnalyticScene& scene, const Vec3& point, const Vec3& normal,
                         const Vec3& albedo);

// First-hit radiance along the ray: emitters evaluate their lobe toward the
// viewer, diffuse surfaces single-bounce shade, misses are black.
Vec3 reference_radiance(const AnalyticScene& scene, const Ray& ray);

// Serial voxel-walk compositor: crosses every voxel boundary, one sample per
// crossed voxel, nearest indexing. The independent reference the fast
// compositor is checked against.
Vec3 reference_radiance(const VsgVolume& volume, const Ray& ray);

// Voxel centers inside a primitive get alpha = 1 and the primitive's lobe;
// diffuse surfaces get an isotropic lobe with the single-bounce shaded color
// at the nearest surface point. Everything else is transparent.
VsgVolume voxelize(const AnalyticScene& scene, const Vec3i& dims);

struct GeneratedObservations {
  std::vector<Observation> observations;  // panoramas, then one perspective view
  SurfaceBuffers surf;                    // ground truth for the perspective camera
  Image albedo_mask;                      // 1 where the gt albedo is locally flat
};

// Renders LDR (or raw HDR when clip is false) panoramas at the given
// positions plus one perspective view through scene.camera, along with the
// analytic surface buffers for that view. Positions must lie inside bounds.
GeneratedObservations generate_observations(const AnalyticScene& scene,
                                            const std::vector<Vec3>& pano_positions,
                                            int pano_height, bool clip);

// Appends albedo/normal/depth supervision targets built from ground-truth
// surface buffers to an observation list.
void append_surface_targets(std::vector<Observation>& obs, const SurfaceBuffers& surf,
                            const Camera& camera, const Image& albedo_mask);

// Canonical scenes: "box-lamp" (emissive ceiling panel over diffuse walls,
// the HDR-recovery benchmark), "two-emitters" (opposing anisotropic lobes,
// view dependence), "slab" (depth oracle).
struct ScenePreset {
  std::string name;
  AnalyticScene scene;
  Vec3i dims{16, 16, 16};
  std::vector<Vec3> pano_positions;
  int pano_height = 64;  // panorama width is twice this
  LossWeights weights;
  FitOptions fit;
};

ScenePreset make_preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace vsg
