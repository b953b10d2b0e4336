#include "vsglight/camera.h"

namespace vsg {

Camera Camera::look_at(int width, int height, double fov_x_radians, const Vec3& from,
                       const Vec3& to, const Vec3& up) {
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = 0.5 * width / std::tan(0.5 * fov_x_radians);
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.position = from;
  Vec3 forward = normalized(to - from);
  Vec3 right = cross(forward, up);
  if (length(right) < 1e-12)
    throw ValidationError("look_at: up direction is parallel to the view direction");
  right = normalized(right);
  // Image +y points down; (right, down, forward) is right-handed.
  Vec3 down = cross(forward, right);
  cam.rotation = Mat3::from_columns(right, down, forward);
  return cam;
}

}  // namespace vsg
