#pragma once

#include "vsglight/math.h"

namespace vsg {

// Unit-direction ray. Constructors normalize; direction length is an invariant.
struct Ray {
  Vec3 origin;
  Vec3 direction{0, 0, 1};

  Ray() = default;
  Ray(const Vec3& o, const Vec3& d) : origin(o), direction(normalized(d)) {}
};

// Pinhole camera, right-handed: +x right, +y down in the image, +z forward.
// `rotation` maps camera space to world space; `position` is the center of
// projection. Pixel (u, v) samples at the pixel center (u + 0.5, v + 0.5).
struct Camera {
  int width = 0, height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  Mat3 rotation;
  Vec3 position;

  void validate() const {
    if (width < 1 || height < 1) throw ValidationError("camera resolution must be positive");
    if (!(fx > 0) || !(fy > 0)) throw ValidationError("camera focal lengths must be positive");
    if (rotation.orthonormality_error() > 1e-9)
      throw ValidationError("camera rotation is not orthonormal within 1e-9");
  }

  // World-space ray through pixel-center coordinates (continuous; pass
  // integer pixel indices to sample pixel centers).
  Ray pixel_to_ray(double u, double v) const {
    Vec3 d{(u + 0.5 - cx) / fx, (v + 0.5 - cy) / fy, 1.0};
    return Ray(position, rotation * d);
  }

  // Unnormalized camera-space pixel direction; its norm converts z-depth to
  // ray distance. Used where the ray and the scale factor are both needed.
  Vec3 pixel_direction_cam(double u, double v) const {
    return {(u + 0.5 - cx) / fx, (v + 0.5 - cy) / fy, 1.0};
  }

  struct Projection {
    bool in_front = false;  // strictly positive camera-space z
    double u = 0, v = 0;    // continuous pixel coordinates
    double distance = 0;    // Euclidean distance from the camera center
    bool in_image = false;
  };

  Projection project(const Vec3& world) const {
    Projection pr;
    Vec3 c = rotation.transposed() * (world - position);
    if (c.z <= 0.0) return pr;
    pr.in_front = true;
    pr.u = fx * c.x / c.z + cx - 0.5;
    pr.v = fy * c.y / c.z + cy - 0.5;
    pr.distance = length(world - position);
    pr.in_image = pr.u >= -0.5 && pr.u <= width - 0.5 && pr.v >= -0.5 && pr.v <= height - 0.5;
    return pr;
  }

  static Camera look_at(int width, int height, double fov_x_radians, const Vec3& from,
                        const Vec3& to, const Vec3& up);
};

// Equirectangular direction for pixel (u, v) of a W x H panorama (W = 2H).
// Row 0 looks toward +elevation (local +y pole); column 0 is azimuth -pi.
// Azimuth 0 looks along local +z; `orientation` maps local to world.
inline Vec3 panorama_direction(double u, double v, int width, int height,
                               const Mat3& orientation) {
  double azimuth = -M_PI + 2.0 * M_PI * (u + 0.5) / width;
  double elevation = 0.5 * M_PI - M_PI * (v + 0.5) / height;
  double ce = std::cos(elevation);
  Vec3 local{ce * std::sin(azimuth), std::sin(elevation), ce * std::cos(azimuth)};
  return orientation * local;
}

}  // namespace vsg
