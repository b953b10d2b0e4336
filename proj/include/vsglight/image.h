#pragma once

#include <vector>

#include "vsglight/math.h"

namespace vsg {

// Row-major, top-down raster with interleaved channels, linear radiometry.
struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<double> data;

  static Image zeros(int w, int h, int c) {
    Image img;
    img.width = w;
    img.height = h;
    img.channels = c;
    img.data.assign(int64_t(w) * h * c, 0.0);
    return img;
  }
  static Image constant(int w, int h, int c, double value) {
    Image img = zeros(w, h, c);
    for (double& v : img.data) v = value;
    return img;
  }

  int64_t pixel_count() const { return int64_t(width) * height; }
  int64_t offset(int x, int y, int c = 0) const {
    return (int64_t(y) * width + x) * channels + c;
  }
  double& at(int x, int y, int c = 0) { return data[offset(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data[offset(x, y, c)]; }

  Vec3 rgb(int x, int y) const {
    int64_t o = offset(x, y);
    return {data[o], data[o + 1], data[o + 2]};
  }
  void set_rgb(int x, int y, const Vec3& v) {
    int64_t o = offset(x, y);
    data[o] = v.x;
    data[o + 1] = v.y;
    data[o + 2] = v.z;
  }

  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// Bilinear sample at continuous pixel-center coordinates (pixel (i, j) is at
// (i, j) here; callers convert). Edge values replicate.
inline double bilinear(const Image& img, double x, double y, int c) {
  double px = clamp(x, 0.0, double(img.width - 1));
  double py = clamp(y, 0.0, double(img.height - 1));
  int x0 = std::min(int(px), img.width - 1), y0 = std::min(int(py), img.height - 1);
  int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  double fx = px - x0, fy = py - y0;
  double a = img.at(x0, y0, c) * (1 - fx) + img.at(x1, y0, c) * fx;
  double b = img.at(x0, y1, c) * (1 - fx) + img.at(x1, y1, c) * fx;
  return a * (1 - fy) + b * fy;
}

inline Vec3 bilinear_rgb(const Image& img, double x, double y) {
  return {bilinear(img, x, y, 0), bilinear(img, x, y, 1), bilinear(img, x, y, 2)};
}

// Per-pixel intrinsics of the observed view: albedo (3), unit normal (3),
// and depth (1) as Euclidean distance from the camera center along the ray.
struct SurfaceBuffers {
  Image albedo;
  Image normal;
  Image depth;

  int width() const { return albedo.width; }
  int height() const { return albedo.height; }

  void validate() const {
    if (albedo.channels != 3 || normal.channels != 3 || depth.channels != 1)
      throw ValidationError("surface buffers must be albedo(3), normal(3), depth(1)");
    if (normal.width != albedo.width || normal.height != albedo.height ||
        depth.width != albedo.width || depth.height != albedo.height)
      throw ValidationError("surface buffer resolutions disagree");
    for (double v : albedo.data)
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("albedo outside [0, 1]");
    for (double v : depth.data)
      if (!(v > 0.0)) throw ValidationError("depth must be strictly positive");
    for (int y = 0; y < normal.height; ++y)
      for (int x = 0; x < normal.width; ++x)
        if (std::abs(length(normal.rgb(x, y)) - 1.0) > 1e-6)
          throw ValidationError("normals must be unit length");
  }
};

}  // namespace vsg
