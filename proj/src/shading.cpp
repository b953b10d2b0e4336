#include "vsglight/shading.h"

#include <vector>

#include "vsglight/parallel.h"

namespace vsg {

namespace {

struct PixelGeometry {
  Vec3 point;    // world position at the stored depth
  Vec3 ray_dir;  // unit direction of the pixel ray
  Vec3 normal;
};

PixelGeometry pixel_geometry(const SurfaceBuffers& surf, const Camera& camera, int x, int y) {
  PixelGeometry g;
  g.ray_dir = camera.pixel_to_ray(x, y).direction;
  g.point = camera.position + g.ray_dir * surf.depth.at(x, y);
  g.normal = surf.normal.rgb(x, y);
  return g;
}

// Incident-light sum and Jacobian for one pixel with a fixed direction set.
void shade_pixel(const VsgVolume& volume, const CompositeConfig& ccfg, const PixelGeometry& geo,
                 const Vec3* dirs, int count, double delta_omega, Vec3& shading_out,
                 double jac_out[9]) {
  Vec3 s;
  for (int i = 0; i < 9; ++i) jac_out[i] = 0.0;
  for (int d = 0; d < count; ++d) {
    const Vec3& l = dirs[d];
    double cosine = dot(l, geo.normal);
    if (cosine <= 0.0) continue;
    Vec3 radiance = composite_radiance(volume, Ray(geo.point, l), ccfg);
    s += radiance * (cosine * delta_omega);
    for (int c = 0; c < 3; ++c) {
      double rc = radiance[c] * delta_omega;
      jac_out[c * 3 + 0] += rc * l.x;
      jac_out[c * 3 + 1] += rc * l.y;
      jac_out[c * 3 + 2] += rc * l.z;
    }
  }
  shading_out = s;
}

Vec3 scene_albedo_over_pi(const SurfaceBuffers& surf, int x, int y) {
  return surf.albedo.rgb(x, y) / M_PI;
}

}  // namespace

ShadeResult shade_lambertian(const SurfaceBuffers& surf, const Camera& camera,
                             const VsgVolume& volume, const ShadeConfig& cfg) {
  surf.validate();
  if (surf.width() != camera.width || surf.height() != camera.height)
    throw ValidationError("surface buffers and camera resolution disagree");
  camera.validate();

  const int w = surf.width(), h = surf.height();
  ShadeResult out;
  out.ldr = Image::zeros(w, h, 3);
  out.shading = Image::zeros(w, h, 3);
  out.jacobian = Image::zeros(w, h, 9);

  HemisphereGrid grid = build_hemisphere_grid(surf.normal, cfg.quad_rays);
  parallel_for(int64_t(w) * h, [&](int64_t pix) {
    int x = int(pix % w), y = int(pix / w);
    PixelGeometry geo = pixel_geometry(surf, camera, x, y);
    Vec3 s;
    double jac[9];
    if (cfg.share_neighbors) {
      HemisphereQuadrature q = neighbor_shared_rays(grid, x, y);
      shade_pixel(volume, cfg.composite, geo, q.directions.data(), int(q.directions.size()),
                  q.delta_omega, s, jac);
    } else {
      shade_pixel(volume, cfg.composite, geo, grid.at(x, y), cfg.quad_rays,
                  2.0 * M_PI / cfg.quad_rays, s, jac);
    }
    out.shading.set_rgb(x, y, s);
    for (int c = 0; c < 9; ++c) out.jacobian.at(x, y, c) = jac[c];
    out.ldr.set_rgb(x, y, soft_clip(scene_albedo_over_pi(surf, x, y) * s, cfg.tau));
  });
  return out;
}

Vec3 shade_lambertian_pixel(const SurfaceBuffers& surf, const Camera& camera,
                            const VsgVolume& volume, const ShadeConfig& cfg,
                            const HemisphereGrid& grid, int x, int y) {
  PixelGeometry geo = pixel_geometry(surf, camera, x, y);
  Vec3 s;
  double jac[9];
  if (cfg.share_neighbors) {
    HemisphereQuadrature q = neighbor_shared_rays(grid, x, y);
    shade_pixel(volume, cfg.composite, geo, q.directions.data(), int(q.directions.size()),
                q.delta_omega, s, jac);
  } else {
    shade_pixel(volume, cfg.composite, geo, grid.at(x, y), grid.k,
                2.0 * M_PI / grid.k, s, jac);
  }
  return soft_clip(scene_albedo_over_pi(surf, x, y) * s, cfg.tau);
}

void shade_lambertian_pixel_backward(const SurfaceBuffers& surf, const Camera& camera,
                                     const VsgVolume& volume, const ShadeConfig& cfg,
                                     const HemisphereGrid& grid, int x, int y, const Vec3& d_ldr,
                                     GradientTape& volume_tape, GradientTape* surf_tape) {
  if (d_ldr.x == 0.0 && d_ldr.y == 0.0 && d_ldr.z == 0.0) return;
  PixelGeometry geo = pixel_geometry(surf, camera, x, y);
  HemisphereQuadrature shared;
  const Vec3* dirs;
  int count;
  double delta_omega;
  if (cfg.share_neighbors) {
    shared = neighbor_shared_rays(grid, x, y);
    dirs = shared.directions.data();
    count = int(shared.directions.size());
    delta_omega = shared.delta_omega;
  } else {
    dirs = grid.at(x, y);
    count = grid.k;
    delta_omega = 2.0 * M_PI / grid.k;
  }

  // Recompute the pixel forward pieces.
  Vec3 s;
  double jac[9];
  shade_pixel(volume, cfg.composite, geo, dirs, count, delta_omega, s, jac);
  Vec3 a_over_pi = scene_albedo_over_pi(surf, x, y);
  Vec3 x_pre = a_over_pi * s;

  Vec3 d_pre{d_ldr.x * soft_clip_derivative(x_pre.x, cfg.tau),
             d_ldr.y * soft_clip_derivative(x_pre.y, cfg.tau),
             d_ldr.z * soft_clip_derivative(x_pre.z, cfg.tau)};
  Vec3 d_s = d_pre * a_over_pi;

  if (surf_tape) {
    Vec3 d_albedo = d_pre * s / M_PI;
    surf_tape->d_albedo.at(x, y, 0) += d_albedo.x;
    surf_tape->d_albedo.at(x, y, 1) += d_albedo.y;
    surf_tape->d_albedo.at(x, y, 2) += d_albedo.z;
    for (int c = 0; c < 3; ++c)
      for (int a = 0; a < 3; ++a) surf_tape->d_normal.at(x, y, a) += d_s[c] * jac[c * 3 + a];
  }

  Vec3 d_origin;
  for (int d = 0; d < count; ++d) {
    const Vec3& l = dirs[d];
    double cosine = dot(l, geo.normal);
    if (cosine <= 0.0) continue;
    Vec3 d_radiance = d_s * (cosine * delta_omega);
    composite_radiance_backward(volume, Ray(geo.point, l), cfg.composite, d_radiance, volume_tape,
                                surf_tape ? &d_origin : nullptr);
  }
  if (surf_tape) surf_tape->d_depth.at(x, y, 0) += dot(d_origin, geo.ray_dir);
}

void shade_lambertian_backward(const SurfaceBuffers& surf, const Camera& camera,
                               const VsgVolume& volume, const ShadeConfig& cfg,
                               const Image& d_ldr, GradientTape& tape) {
  if (d_ldr.width != surf.width() || d_ldr.height != surf.height() || d_ldr.channels != 3)
    throw ValidationError("d_ldr resolution disagrees with the surface buffers");
  const int w = surf.width(), h = surf.height();
  const bool want_surf = tape.d_albedo.width == w && tape.d_albedo.height == h;

  HemisphereGrid grid = build_hemisphere_grid(surf.normal, cfg.quad_rays);

  // Thread-local volume tapes, merged in thread order for reproducibility.
  // Surface gradients go straight into the shared tape: pixels are disjoint.
  const int nthreads = thread_count();
  std::vector<GradientTape> locals(nthreads);
  for (auto& t : locals) {
    t.nx = tape.nx;
    t.ny = tape.ny;
    t.nz = tape.nz;
    t.d_volume.assign(tape.d_volume.size(), 0.0);
  }

#pragma omp parallel for schedule(static)
  for (int64_t pix = 0; pix < int64_t(w) * h; ++pix) {
    int x = int(pix % w), y = int(pix / w);
    shade_lambertian_pixel_backward(surf, camera, volume, cfg, grid, x, y, d_ldr.rgb(x, y),
                                    locals[current_thread()], want_surf ? &tape : nullptr);
  }

  for (const auto& local : locals)
    for (size_t i = 0; i < tape.d_volume.size(); ++i) tape.d_volume[i] += local.d_volume[i];
}

Image render_panorama(const VsgVolume& volume, const Vec3& position, const PanoramaConfig& cfg) {
  if (cfg.width != 2 * cfg.height)
    throw ValidationError("panorama width must be twice its height");
  Image img = Image::zeros(cfg.width, cfg.height, 3);
  parallel_for(int64_t(cfg.width) * cfg.height, [&](int64_t pix) {
    int x = int(pix % cfg.width), y = int(pix / cfg.width);
    Vec3 dir = panorama_direction(x, y, cfg.width, cfg.height, cfg.orientation);
    Vec3 radiance = composite_radiance(volume, Ray(position, dir), cfg.composite);
    img.set_rgb(x, y, cfg.hdr ? radiance : soft_clip(radiance, cfg.tau));
  });
  return img;
}

PerspectiveRender render_perspective_from_volume(const VsgVolume& volume, const Camera& camera,
                                                 const PerspectiveConfig& cfg) {
  camera.validate();
  PerspectiveRender out;
  out.rgb = Image::zeros(camera.width, camera.height, 3);
  out.depth = Image::zeros(camera.width, camera.height, 1);
  parallel_for(int64_t(camera.width) * camera.height, [&](int64_t pix) {
    int x = int(pix % camera.width), y = int(pix / camera.width);
    Ray ray = camera.pixel_to_ray(x, y);
    Vec3 radiance = composite_radiance(volume, ray, cfg.composite);
    out.rgb.set_rgb(x, y, cfg.hdr ? radiance : soft_clip(radiance, cfg.tau));
    out.depth.at(x, y) = composite_depth(volume, ray, cfg.composite);
  });
  return out;
}

namespace {

// Nearest positive ray-sphere intersection, if any.
bool intersect_sphere(const Vec3& o, const Vec3& d, const Vec3& center, double radius,
                      double& t_hit) {
  Vec3 oc = o - center;
  double b = dot(oc, d);
  double c = dot(oc, oc) - radius * radius;
  double disc = b * b - c;
  if (disc < 0.0) return false;
  double s = std::sqrt(disc);
  double t = -b - s;
  if (t <= 0.0) t = -b + s;
  if (t <= 0.0) return false;
  t_hit = t;
  return true;
}

}  // namespace

Image insert_sphere(const VsgVolume& volume, const Image& image, const SurfaceBuffers& surf,
                    const Camera& camera, const SphereInsertion& sphere, const InsertConfig& cfg) {
  surf.validate();
  if (image.width != surf.width() || image.height != surf.height() || image.channels != 3)
    throw ValidationError("image and surface buffers disagree");
  if (surf.width() != camera.width || surf.height() != camera.height)
    throw ValidationError("surface buffers and camera resolution disagree");
  if (sphere.radius <= 0.0) return image;
  // Fully behind the camera: unchanged.
  Vec3 center_cam = camera.rotation.transposed() * (sphere.center - camera.position);
  if (center_cam.z <= -sphere.radius) return image;

  Image out = image;
  ShadeConfig scfg;
  scfg.quad_rays = cfg.quad_rays;
  scfg.composite = cfg.composite;
  scfg.tau = cfg.tau;

  parallel_for(int64_t(image.width) * image.height, [&](int64_t pix) {
    int x = int(pix % image.width), y = int(pix / image.width);
    Ray ray = camera.pixel_to_ray(x, y);
    double t_hit;
    bool hits = intersect_sphere(ray.origin, ray.direction, sphere.center, sphere.radius, t_hit);
    double scene_depth = surf.depth.at(x, y);

    if (hits && t_hit < scene_depth) {
      // Sphere pixel: shade the hit point from the light field.
      Vec3 p = ray.origin + ray.direction * t_hit;
      Vec3 n = normalized(p - sphere.center);
      if (sphere.mirror) {
        Vec3 r = ray.direction - n * (2.0 * dot(ray.direction, n));
        Vec3 radiance = composite_radiance(volume, Ray(p, r), cfg.composite);
        out.set_rgb(x, y, soft_clip(radiance, cfg.tau));
      } else {
        HemisphereQuadrature q = fibonacci_hemisphere(n, cfg.quad_rays);
        Vec3 s;
        for (const Vec3& l : q.directions) {
          double cosine = dot(l, n);
          if (cosine <= 0.0) continue;
          s += composite_radiance(volume, Ray(p, l), cfg.composite) * (cosine * q.delta_omega);
        }
        out.set_rgb(x, y, soft_clip(sphere.albedo / M_PI * s, cfg.tau));
      }
      return;
    }

    // Background pixel: scale by the occluded / unoccluded re-shading ratio
    // of the observed surface point (sphere shadowing).
    PixelGeometry geo = pixel_geometry(surf, camera, x, y);
    HemisphereQuadrature q = fibonacci_hemisphere(geo.normal, cfg.quad_rays);
    Vec3 s_free, s_occluded;
    bool any_blocked = false;
    for (const Vec3& l : q.directions) {
      double cosine = dot(l, geo.normal);
      if (cosine <= 0.0) continue;
      Vec3 contribution =
          composite_radiance(volume, Ray(geo.point, l), cfg.composite) * (cosine * q.delta_omega);
      s_free += contribution;
      double tb;
      bool blocked = intersect_sphere(geo.point, l, sphere.center, sphere.radius, tb);
      if (blocked)
        any_blocked = true;
      else
        s_occluded += contribution;
    }
    if (!any_blocked) return;
    for (int c = 0; c < 3; ++c) {
      double ratio = s_free[c] > 0.0 ? s_occluded[c] / s_free[c] : 1.0;
      out.at(x, y, c) = image.at(x, y, c) * ratio;
    }
  });
  return out;
}

}  // namespace vsg
