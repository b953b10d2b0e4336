#include "vsglight/scene.h"

#include <algorithm>
#include <cmath>

#include "vsglight/parallel.h"
#include "vsglight/quadrature.h"
#include "vsglight/shading.h"

namespace vsg {

namespace {

constexpr double kHitEps = 1e-9;       // minimum accepted ray parameter
constexpr double kShadowOffset = 1e-6; // meters, lifts shadow-ray origins off surfaces

SphericalGaussian emitter_lobe(const ScenePrimitive& p) {
  return {p.radiance, p.lobe_axis, p.lobe_sigma};
}

bool primitive_contains(const ScenePrimitive& p, const Vec3& q) {
  if (p.shape == ScenePrimitive::Shape::kBox) return p.box.contains(q);
  return length(q - p.center) <= p.radius;
}

}  // namespace

void AnalyticScene::validate() const {
  Vec3 e = bounds.extent();
  if (!(e.x > 0.0 && e.y > 0.0 && e.z > 0.0))
    throw ValidationError("scene bounds must have positive extent");
  for (const ScenePrimitive& p : primitives) {
    if (p.shape == ScenePrimitive::Shape::kBox) {
      Vec3 be = p.box.extent();
      if (!(be.x > 0.0 && be.y > 0.0 && be.z > 0.0))
        throw ValidationError("box primitive must have positive extent");
      if (!bounds.contains(p.box.min) || !bounds.contains(p.box.max))
        throw ValidationError("box primitive extends outside the scene bounds");
    } else {
      if (!(p.radius > 0.0)) throw ValidationError("sphere primitive needs a positive radius");
      for (int a = 0; a < 3; ++a) {
        Vec3 lo = p.center, hi = p.center;
        lo[a] -= p.radius;
        hi[a] += p.radius;
        if (!bounds.contains(lo) || !bounds.contains(hi))
          throw ValidationError("sphere primitive extends outside the scene bounds");
      }
    }
    if (p.role == ScenePrimitive::Role::kEmitter) {
      if (p.radiance.x < 0.0 || p.radiance.y < 0.0 || p.radiance.z < 0.0)
        throw ValidationError("emitter radiance must be nonnegative");
      if (!(p.lobe_sigma > 1e-3))
        throw ValidationError("emitter lobe bandwidth must exceed the storable floor");
    }
  }
  if (shading_rays < 1) throw ValidationError("scene shading quadrature needs at least one ray");
}

SceneHit intersect_scene(const AnalyticScene& scene, const Ray& ray) {
  SceneHit best;
  for (size_t i = 0; i < scene.primitives.size(); ++i) {
    const ScenePrimitive& p = scene.primitives[i];
    double t;
    Vec3 normal;
    if (p.shape == ScenePrimitive::Shape::kBox) {
      double t0, t1;
      int entry_axis, exit_axis;
      if (!intersect_aabb(p.box, ray.origin, ray.direction, t0, t1, &entry_axis, &exit_axis))
        continue;
      int axis;
      if (t0 > kHitEps) {
        t = t0;
        axis = entry_axis;
      } else if (t1 > kHitEps) {
        t = t1;  // origin inside: the far face, normal still facing the origin
        axis = exit_axis;
      } else {
        continue;
      }
      normal = {};
      normal[axis] = ray.direction[axis] > 0.0 ? -1.0 : 1.0;
    } else {
      Vec3 oc = ray.origin - p.center;
      double b = dot(oc, ray.direction);
      double c = dot(oc, oc) - p.radius * p.radius;
      double disc = b * b - c;
      if (disc < 0.0) continue;
      double s = std::sqrt(disc);
      t = -b - s;
      if (t <= kHitEps) t = -b + s;
      if (t <= kHitEps) continue;
      normal = normalized(ray.origin + ray.direction * t - p.center);
      if (dot(normal, ray.direction) > 0.0) normal = -normal;
    }
    if (!best.hit || t < best.t) {
      best.hit = true;
      best.t = t;
      best.prim = int(i);
      best.point = ray.origin + ray.direction * t;
      best.normal = normal;
    }
  }
  return best;
}

Vec3 shade_surface_point(const AnalyticScene& scene, const Vec3& point, const Vec3& normal,
                         const Vec3& albedo) {
  HemisphereQuadrature q = fibonacci_hemisphere(normal, scene.shading_rays);
  Vec3 origin = point + normal * kShadowOffset;
  Vec3 s;
  for (const Vec3& l : q.directions) {
    double cosine = dot(l, normal);
    if (cosine <= 0.0) continue;
    SceneHit h = intersect_scene(scene, Ray(origin, l));
    if (!h.hit) continue;
    const ScenePrimitive& p = scene.primitives[h.prim];
    if (p.role != ScenePrimitive::Role::kEmitter) continue;  // single bounce
    s += sg_eval(-l, emitter_lobe(p)) * (cosine * q.delta_omega);
  }
  return albedo / M_PI * s;
}

Vec3 reference_radiance(const AnalyticScene& scene, const Ray& ray) {
  SceneHit h = intersect_scene(scene, ray);
  if (!h.hit) return {};
  const ScenePrimitive& p = scene.primitives[h.prim];
  if (p.role == ScenePrimitive::Role::kEmitter) return sg_eval(-ray.direction, emitter_lobe(p));
  return shade_surface_point(scene, h.point, h.normal, p.albedo);
}

Vec3 reference_radiance(const VsgVolume& volume, const Ray& ray) {
  double t0, t1;
  if (!intersect_aabb(volume.bounds, ray.origin, ray.direction, t0, t1)) return {};
  if (t0 < 0.0) t0 = 0.0;
  if (t1 <= t0) return {};

  // Classic grid walk: visit each crossed voxel once, nearest indexing.
  Vec3 h = volume.voxel_size();
  const int dims[3] = {volume.nx, volume.ny, volume.nz};
  Vec3 entry = ray.origin + ray.direction * t0;
  int cell[3];
  int step[3];
  double tmax[3], tdelta[3];
  for (int a = 0; a < 3; ++a) {
    double u = (entry[a] - volume.bounds.min[a]) / h[a];
    cell[a] = std::clamp(int(std::floor(u)), 0, dims[a] - 1);
    if (ray.direction[a] > 0.0) {
      step[a] = 1;
      double boundary = volume.bounds.min[a] + (cell[a] + 1) * h[a];
      tmax[a] = (boundary - ray.origin[a]) / ray.direction[a];
      tdelta[a] = h[a] / ray.direction[a];
    } else if (ray.direction[a] < 0.0) {
      step[a] = -1;
      double boundary = volume.bounds.min[a] + cell[a] * h[a];
      tmax[a] = (boundary - ray.origin[a]) / ray.direction[a];
      tdelta[a] = -h[a] / ray.direction[a];
    } else {
      step[a] = 0;
      tmax[a] = std::numeric_limits<double>::infinity();
      tdelta[a] = std::numeric_limits<double>::infinity();
    }
  }

  Vec3 v = -ray.direction;
  Vec3 out;
  double transmittance = 1.0;
  while (true) {
    VoxelRecord rec = volume.record(volume.index(cell[0], cell[1], cell[2]));
    if (rec.alpha != 0.0) {
      out += (transmittance * rec.alpha) * sg_eval(v, rec.sg);
      transmittance *= 1.0 - rec.alpha;
      if (transmittance == 0.0) break;
    }
    int axis = 0;
    if (tmax[1] < tmax[axis]) axis = 1;
    if (tmax[2] < tmax[axis]) axis = 2;
    if (tmax[axis] >= t1) break;
    cell[axis] += step[axis];
    if (cell[axis] < 0 || cell[axis] >= dims[axis]) break;
    tmax[axis] += tdelta[axis];
  }
  return out;
}

VsgVolume voxelize(const AnalyticScene& scene, const Vec3i& dims) {
  scene.validate();
  if (dims.x < 2 || dims.y < 2 || dims.z < 2)
    throw ValidationError("voxelization needs at least 2 cells per axis");
  VsgVolume vol = VsgVolume::zeros(dims.x, dims.y, dims.z, scene.bounds);

  parallel_for(vol.voxel_count(), [&](int64_t i) {
    int x = int(i % dims.x);
    int y = int((i / dims.x) % dims.y);
    int z = int(i / (int64_t(dims.x) * dims.y));
    Vec3 c = vol.voxel_center(x, y, z);

    const ScenePrimitive* prim = nullptr;
    for (const ScenePrimitive& p : scene.primitives)
      if (primitive_contains(p, c)) {
        prim = &p;
        break;
      }
    if (!prim) return;

    if (prim->role == ScenePrimitive::Role::kEmitter) {
      vol.set_record(x, y, z, 1.0, prim->radiance, prim->lobe_axis,
                     raw_from_sigma(prim->lobe_sigma));
      return;
    }

    // Diffuse: shade the nearest surface point of the containing primitive.
    Vec3 point, normal;
    if (prim->shape == ScenePrimitive::Shape::kBox) {
      double best = std::numeric_limits<double>::infinity();
      int axis = 0;
      bool min_side = true;
      for (int a = 0; a < 3; ++a) {
        double dmin = c[a] - prim->box.min[a];
        double dmax = prim->box.max[a] - c[a];
        if (dmin < best) {
          best = dmin;
          axis = a;
          min_side = true;
        }
        if (dmax < best) {
          best = dmax;
          axis = a;
          min_side = false;
        }
      }
      point = c;
      point[axis] = min_side ? prim->box.min[axis] : prim->box.max[axis];
      normal = {};
      normal[axis] = min_side ? -1.0 : 1.0;
    } else {
      Vec3 d = c - prim->center;
      double len = length(d);
      normal = len > 1e-12 ? d / len : Vec3{0, 0, 1};
      point = prim->center + normal * prim->radius;
    }
    Vec3 color = shade_surface_point(scene, point, normal, prim->albedo);
    vol.set_record(x, y, z, 1.0, color, Vec3{}, raw_from_sigma(1.0));
  });
  return vol;
}

GeneratedObservations generate_observations(const AnalyticScene& scene,
                                            const std::vector<Vec3>& pano_positions,
                                            int pano_height, bool clip) {
  scene.validate();
  scene.camera.validate();
  if (pano_height < 1) throw ValidationError("panorama height must be positive");
  for (const Vec3& p : pano_positions)
    if (!scene.bounds.contains(p))
      throw ValidationError("panorama position lies outside the scene bounds");

  GeneratedObservations out;
  const int pw = 2 * pano_height, ph = pano_height;
  for (const Vec3& pos : pano_positions) {
    Observation o;
    o.kind = ObservationKind::kPanorama;
    o.position = pos;
    o.image = Image::zeros(pw, ph, 3);
    parallel_for(int64_t(pw) * ph, [&](int64_t pix) {
      int x = int(pix % pw), y = int(pix / pw);
      Vec3 dir = panorama_direction(x, y, pw, ph, o.orientation);
      Vec3 r = reference_radiance(scene, Ray(pos, dir));
      o.image.set_rgb(x, y, clip ? soft_clip(r, kSoftClipKnee) : r);
    });
    out.observations.push_back(std::move(o));
  }

  const Camera& cam = scene.camera;
  Observation view;
  view.kind = ObservationKind::kPerspective;
  view.camera = cam;
  view.image = Image::zeros(cam.width, cam.height, 3);
  view.depth = Image::zeros(cam.width, cam.height, 1);
  out.surf.albedo = Image::zeros(cam.width, cam.height, 3);
  out.surf.normal = Image::zeros(cam.width, cam.height, 3);
  out.surf.depth = Image::zeros(cam.width, cam.height, 1);

  parallel_for(int64_t(cam.width) * cam.height, [&](int64_t pix) {
    int x = int(pix % cam.width), y = int(pix / cam.width);
    Ray ray = cam.pixel_to_ray(x, y);
    SceneHit h = intersect_scene(scene, ray);
    Vec3 radiance, albedo, normal;
    double depth;
    if (h.hit) {
      const ScenePrimitive& p = scene.primitives[h.prim];
      if (p.role == ScenePrimitive::Role::kEmitter) {
        radiance = sg_eval(-ray.direction, emitter_lobe(p));
        albedo = {};
      } else {
        radiance = shade_surface_point(scene, h.point, h.normal, p.albedo);
        albedo = p.albedo;
      }
      normal = h.normal;
      depth = h.t;
    } else {
      // Background: transparent space out to the bounds, consistent with the
      // compositor's exit-distance depth convention.
      double t0, t1;
      bool inside = intersect_aabb(scene.bounds, ray.origin, ray.direction, t0, t1) && t1 > 0.0;
      depth = inside ? t1 : 1.0;
      normal = -ray.direction;
      albedo = {};
    }
    view.image.set_rgb(x, y, clip ? soft_clip(radiance, kSoftClipKnee) : radiance);
    view.depth.at(x, y) = depth;
    out.surf.albedo.set_rgb(x, y, albedo);
    out.surf.normal.set_rgb(x, y, normal);
    out.surf.depth.at(x, y) = depth;
  });

  // Locally flat gt albedo: every in-bounds 4-neighbor matches exactly.
  out.albedo_mask = Image::zeros(cam.width, cam.height, 1);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      Vec3 a = out.surf.albedo.rgb(x, y);
      bool flat = true;
      const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (auto& d : nb) {
        int xx = x + d[0], yy = y + d[1];
        if (xx < 0 || yy < 0 || xx >= cam.width || yy >= cam.height) continue;
        Vec3 b = out.surf.albedo.rgb(xx, yy);
        if (b.x != a.x || b.y != a.y || b.z != a.z) flat = false;
      }
      out.albedo_mask.at(x, y) = flat ? 1.0 : 0.0;
    }

  out.observations.push_back(std::move(view));
  return out;
}

void append_surface_targets(std::vector<Observation>& obs, const SurfaceBuffers& surf,
                            const Camera& camera, const Image& albedo_mask) {
  Observation a;
  a.kind = ObservationKind::kAlbedoGt;
  a.camera = camera;
  a.image = surf.albedo;
  a.mask = albedo_mask;
  obs.push_back(std::move(a));

  Observation n;
  n.kind = ObservationKind::kNormalGt;
  n.camera = camera;
  n.image = surf.normal;
  obs.push_back(std::move(n));

  Observation d;
  d.kind = ObservationKind::kDepthGt;
  d.camera = camera;
  d.image = surf.depth;
  obs.push_back(std::move(d));
}

namespace {

ScenePrimitive diffuse_box(const Vec3& lo, const Vec3& hi, double albedo) {
  ScenePrimitive p;
  p.shape = ScenePrimitive::Shape::kBox;
  p.role = ScenePrimitive::Role::kDiffuse;
  p.box = {lo, hi};
  p.albedo = {albedo, albedo, albedo};
  return p;
}

ScenePrimitive emitter_box(const Vec3& lo, const Vec3& hi, const Vec3& radiance,
                           const Vec3& axis, double sigma) {
  ScenePrimitive p;
  p.shape = ScenePrimitive::Shape::kBox;
  p.role = ScenePrimitive::Role::kEmitter;
  p.box = {lo, hi};
  p.radiance = radiance;
  p.lobe_axis = axis;
  p.lobe_sigma = sigma;
  return p;
}

}  // namespace

ScenePreset make_preset(const std::string& name) {
  ScenePreset p;
  p.name = name;
  AABB bounds{{-1.6, -1.6, -1.6}, {1.6, 1.6, 1.6}};
  p.scene.bounds = bounds;

  if (name == "box-lamp") {
    // Emissive ceiling panel over a floor and two walls; the camera studies a
    // lit floor patch from the opposite corner. The HDR-recovery benchmark.
    p.scene.primitives = {
        diffuse_box({-1.6, -1.6, -1.6}, {1.6, -1.4, 1.6}, 0.4),    // floor
        diffuse_box({-1.6, -1.4, -1.6}, {-1.4, 1.6, 1.6}, 0.25),   // wall at x min
        diffuse_box({-1.4, -1.4, 1.4}, {1.6, 1.6, 1.6}, 0.25),     // wall at z max
        emitter_box({-0.8, 1.4, -0.8}, {0.8, 1.6, 0.8}, {5, 5, 5}, {}, 1.0),
    };
    p.scene.camera = Camera::look_at(16, 12, 2.0 * std::atan2(8.0, 16.0), {1.0, 0.4, -1.0},
                                     {-0.9, -1.4, 0.9}, {0, 1, 0});
    p.dims = {16, 16, 16};
    p.pano_positions = {{0, 0, 0}, {0.8, -0.6, -0.8}, {-0.7, 0.5, 0.3}};
    p.pano_height = 80;
    p.fit.iterations = 2000;
    p.fit.seed = 7;
    p.fit.render.composite.n_samples = 32;
    p.fit.render.quad_rays = 256;
  } else if (name == "two-emitters") {
    // Opposing anisotropic lobes: brightness depends on where you look from.
    p.scene.primitives = {
        emitter_box({-1.2, -0.2, -0.2}, {-0.8, 0.2, 0.2}, {4, 2, 1}, {1, 0, 0}, 0.7),
        emitter_box({0.8, -0.2, -0.2}, {1.2, 0.2, 0.2}, {1, 2, 4}, {-1, 0, 0}, 0.7),
    };
    p.scene.camera = Camera::look_at(16, 16, 2.0 * std::atan2(8.0, 52.0), {0.4, 0, 0},
                                     {-1.0, 0, 0}, {0, 1, 0});
    p.dims = {32, 32, 32};
    p.pano_positions = {{0.5, 0, 0}, {0, 0.9, 0}};
    p.pano_height = 64;
    p.fit.iterations = 300;
    p.fit.render.composite.n_samples = 48;
  } else if (name == "slab") {
    // Opaque diffuse slab facing the camera; the depth oracle.
    p.scene.primitives = {
        diffuse_box({-1.6, -1.6, 0.6}, {1.6, 1.6, 1.0}, 0.5),
        emitter_box({-0.5, 1.3, -0.9}, {0.5, 1.5, -0.5}, {3, 3, 3}, {}, 1.0),
    };
    Camera cam;
    cam.width = 64;
    cam.height = 64;
    cam.fx = cam.fy = 48.0;
    cam.cx = 32.0;
    cam.cy = 32.0;
    cam.position = {0, 0, -1.2};
    p.scene.camera = cam;
    p.dims = {64, 64, 64};
    p.pano_positions = {{0, 0, -0.5}};
    p.pano_height = 64;
    p.fit.iterations = 300;
    p.fit.render.composite.n_samples = 96;
  } else {
    throw ValidationError("unknown scene preset: " + name);
  }
  return p;
}

std::vector<std::string> preset_names() { return {"box-lamp", "two-emitters", "slab"}; }

}  // namespace vsg
