#pragma once

#include <string>
#include <vector>

#include "vsglight/camera.h"
#include "vsglight/fit.h"
#include "vsglight/image.h"
#include "vsglight/losses.h"
#include "vsglight/volume.h"

namespace vsg {

// HDR images: PFM, f32, bottom-up rows. Writes are little-endian (scale -1);
// reads accept either endianness. 1 (Pf) or 3 (PF) channels.
Image read_pfm(const std::string& path);
void write_pfm(const std::string& path, const Image& img);

// LDR images: 8-bit PNG, gray or RGB. Values are linearized via gamma 2.2 on
// load and encoded back on save (inputs clamp to [0, 1]).
Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);

// Dispatch on the file extension (.pfm or .png).
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& img);

// Volume container: "VSG1" magic; little-endian u32 dims; f32 min corner and
// extent; one 8-f32 record per voxel in storage order. Records hold decoded
// opacity and decoded bandwidth; malformed files fail with the byte offset.
VsgVolume read_vsg1(const std::string& path);
void write_vsg1(const std::string& path, const VsgVolume& volume);

// One entry of the observation manifest. Paths are stored as written and
// resolved against the config file's directory on load.
struct ObservationEntry {
  std::string kind;  // panorama | perspective | albedo | normal | depth
  std::string image;
  std::string depth;  // perspective only
  std::string mask;   // albedo only, optional
  Vec3 position;      // panorama pose
  bool has_orientation = false;
  Mat3 orientation;  // panorama only, identity when absent
  int camera = -1;   // index into cameras for the non-panorama kinds
};

// Starting volume for fits: a file, or a uniform fill.
struct InitialVolume {
  std::string path;  // VSG1; empty selects the uniform fill below
  double alpha = 0.1;
  Vec3 color{0.5, 0.5, 0.5};
  double sigma = 1.0;  // decoded bandwidth, isotropic lobe
};

struct SurfacePaths {
  std::string albedo, normal, depth;  // all set or all empty
};

struct SceneConfig {
  Vec3i dims{128, 128, 128};
  AABB bounds{{-3.2, -3.2, -3.2}, {3.2, 3.2, 3.2}};
  uint64_t seed = 0;
  InitialVolume initial;
  std::vector<Camera> cameras;
  std::vector<ObservationEntry> observations;
  SurfacePaths surface;
  LossWeights weights;
  FitOptions fit;  // optimizer scalars plus fit.render; fit.surf stays empty
};

// Strict JSON: unknown keys are rejected with the offending key named.
// save emits the full canonical form, so load -> save -> load is idempotent.
SceneConfig load_scene_config(const std::string& path);
void save_scene_config(const std::string& path, const SceneConfig& config);

// Standalone camera JSON (same schema as a cameras[] element).
Camera load_camera(const std::string& path);
void save_camera(const std::string& path, const Camera& camera);

// `relative` against the directory containing `config_path` (absolute paths
// pass through).
std::string resolve_path(const std::string& config_path, const std::string& relative);

// Everything a fit needs, loaded from a config: the initial volume, the
// observation list with images attached, and surface buffers when configured.
struct LoadedScene {
  SceneConfig config;
  VsgVolume initial;
  std::vector<Observation> observations;
  SurfaceBuffers surf;  // zero-size images when the config has no surface
};

LoadedScene load_scene(const std::string& config_path);

}  // namespace vsg
