#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "vsglight/io.h"

namespace vsg {

namespace {

using json = nlohmann::ordered_json;

// Strict schemas: every object's keys must come from the allowed set.
void expect_keys(const json& j, const char* ctx, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(std::string("config: ") + ctx + " must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw ValidationError("config: unknown key \"" + item.key() + "\" in " + ctx);
  }
}

double get_number(const json& j, const char* ctx) {
  if (!j.is_number()) throw ValidationError(std::string("config: ") + ctx + " must be a number");
  return j.get<double>();
}

int get_int(const json& j, const char* ctx) {
  if (!j.is_number_integer())
    throw ValidationError(std::string("config: ") + ctx + " must be an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const char* ctx) {
  if (!j.is_string()) throw ValidationError(std::string("config: ") + ctx + " must be a string");
  return j.get<std::string>();
}

bool get_bool(const json& j, const char* ctx) {
  if (!j.is_boolean()) throw ValidationError(std::string("config: ") + ctx + " must be a boolean");
  return j.get<bool>();
}

Vec3 get_vec3(const json& j, const char* ctx) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError(std::string("config: ") + ctx + " must be an array of 3 numbers");
  return {get_number(j[0], ctx), get_number(j[1], ctx), get_number(j[2], ctx)};
}

Mat3 get_mat3(const json& j, const char* ctx) {
  if (!j.is_array() || j.size() != 9)
    throw ValidationError(std::string("config: ") + ctx +
                          " must be an array of 9 numbers, row-major");
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) m.m[i][k] = get_number(j[i * 3 + k], ctx);
  return m;
}

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json mat3_json(const Mat3& m) {
  json a = json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) a.push_back(m.m[i][k]);
  return a;
}

Camera parse_camera(const json& j, const char* ctx) {
  expect_keys(j, ctx, {"width", "height", "fx", "fy", "cx", "cy", "position", "rotation"});
  for (const char* k : {"width", "height", "fx", "fy", "cx", "cy", "position", "rotation"})
    if (!j.contains(k))
      throw ValidationError(std::string("config: ") + ctx + " is missing \"" + k + "\"");
  Camera cam;
  cam.width = get_int(j["width"], "camera width");
  cam.height = get_int(j["height"], "camera height");
  cam.fx = get_number(j["fx"], "camera fx");
  cam.fy = get_number(j["fy"], "camera fy");
  cam.cx = get_number(j["cx"], "camera cx");
  cam.cy = get_number(j["cy"], "camera cy");
  cam.position = get_vec3(j["position"], "camera position");
  cam.rotation = get_mat3(j["rotation"], "camera rotation");
  cam.validate();
  return cam;
}

json camera_json(const Camera& cam) {
  json j;
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["position"] = vec3_json(cam.position);
  j["rotation"] = mat3_json(cam.rotation);
  return j;
}

ObservationEntry parse_observation(const json& j, size_t index) {
  const std::string ctx = "observations[" + std::to_string(index) + "]";
  ObservationEntry e;
  if (!j.contains("kind") || !j.contains("image"))
    throw ValidationError("config: " + ctx + " needs \"kind\" and \"image\"");
  e.kind = get_string(j["kind"], "observation kind");
  e.image = get_string(j["image"], "observation image");

  if (e.kind == "panorama") {
    expect_keys(j, ctx.c_str(), {"kind", "image", "position", "orientation"});
    if (!j.contains("position"))
      throw ValidationError("config: " + ctx + " (panorama) needs \"position\"");
    e.position = get_vec3(j["position"], "panorama position");
    if (j.contains("orientation")) {
      e.has_orientation = true;
      e.orientation = get_mat3(j["orientation"], "panorama orientation");
    }
    return e;
  }

  if (e.kind != "perspective" && e.kind != "albedo" && e.kind != "normal" && e.kind != "depth")
    throw ValidationError("config: " + ctx + " has unknown kind \"" + e.kind + "\"");
  if (!j.contains("camera"))
    throw ValidationError("config: " + ctx + " (" + e.kind + ") needs a camera index");
  e.camera = get_int(j["camera"], "observation camera index");

  if (e.kind == "perspective") {
    expect_keys(j, ctx.c_str(), {"kind", "image", "depth", "camera"});
    if (!j.contains("depth"))
      throw ValidationError("config: " + ctx + " (perspective) needs a depth path");
    e.depth = get_string(j["depth"], "observation depth");
  } else if (e.kind == "albedo") {
    expect_keys(j, ctx.c_str(), {"kind", "image", "mask", "camera"});
    if (j.contains("mask")) e.mask = get_string(j["mask"], "observation mask");
  } else {
    expect_keys(j, ctx.c_str(), {"kind", "image", "camera"});
  }
  return e;
}

json observation_json(const ObservationEntry& e) {
  json j;
  j["kind"] = e.kind;
  j["image"] = e.image;
  if (e.kind == "panorama") {
    j["position"] = vec3_json(e.position);
    if (e.has_orientation) j["orientation"] = mat3_json(e.orientation);
    return j;
  }
  if (e.kind == "perspective") j["depth"] = e.depth;
  if (e.kind == "albedo" && !e.mask.empty()) j["mask"] = e.mask;
  j["camera"] = e.camera;
  return j;
}

}  // namespace

SceneConfig load_scene_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": JSON parse error: " + e.what());
  }

  expect_keys(j, "the top level",
              {"dims", "bounds", "seed", "initial", "cameras", "observations", "surface",
               "weights", "optimizer", "render"});
  if (!j.contains("dims") || !j.contains("bounds"))
    throw ValidationError("config: \"dims\" and \"bounds\" are required");

  SceneConfig c;
  {
    const json& d = j["dims"];
    if (!d.is_array() || d.size() != 3)
      throw ValidationError("config: dims must be an array of 3 integers");
    c.dims = {get_int(d[0], "dims"), get_int(d[1], "dims"), get_int(d[2], "dims")};
    if (c.dims.x < 1 || c.dims.y < 1 || c.dims.z < 1)
      throw ValidationError("config: dims must be positive");
  }
  {
    const json& b = j["bounds"];
    expect_keys(b, "bounds", {"min", "max"});
    if (!b.contains("min") || !b.contains("max"))
      throw ValidationError("config: bounds needs \"min\" and \"max\"");
    c.bounds.min = get_vec3(b["min"], "bounds min");
    c.bounds.max = get_vec3(b["max"], "bounds max");
    Vec3 e = c.bounds.extent();
    if (!(e.x > 0.0 && e.y > 0.0 && e.z > 0.0))
      throw ValidationError("config: bounds extent must be positive");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw ValidationError("config: seed must be a nonnegative integer");
    c.seed = j["seed"].get<uint64_t>();
  }

  if (j.contains("initial")) {
    const json& i = j["initial"];
    expect_keys(i, "initial", {"volume", "alpha", "color", "sigma"});
    if (i.contains("volume")) c.initial.path = get_string(i["volume"], "initial volume");
    if (i.contains("alpha")) c.initial.alpha = get_number(i["alpha"], "initial alpha");
    if (i.contains("color")) c.initial.color = get_vec3(i["color"], "initial color");
    if (i.contains("sigma")) c.initial.sigma = get_number(i["sigma"], "initial sigma");
    if (!(c.initial.alpha >= 0.0 && c.initial.alpha <= 1.0))
      throw ValidationError("config: initial alpha must lie in [0, 1]");
    if (!(c.initial.sigma > 1e-3))
      throw ValidationError("config: initial sigma must exceed 1e-3");
  }

  if (j.contains("cameras")) {
    if (!j["cameras"].is_array()) throw ValidationError("config: cameras must be an array");
    for (size_t i = 0; i < j["cameras"].size(); ++i)
      c.cameras.push_back(
          parse_camera(j["cameras"][i], ("cameras[" + std::to_string(i) + "]").c_str()));
  }

  if (j.contains("observations")) {
    if (!j["observations"].is_array())
      throw ValidationError("config: observations must be an array");
    for (size_t i = 0; i < j["observations"].size(); ++i) {
      ObservationEntry e = parse_observation(j["observations"][i], i);
      if (e.camera >= 0 && size_t(e.camera) >= c.cameras.size())
        throw ValidationError("config: observations[" + std::to_string(i) +
                              "] camera index out of range");
      c.observations.push_back(std::move(e));
    }
  }

  if (j.contains("surface")) {
    const json& s = j["surface"];
    expect_keys(s, "surface", {"albedo", "normal", "depth"});
    if (!s.contains("albedo") || !s.contains("normal") || !s.contains("depth"))
      throw ValidationError("config: surface needs albedo, normal, and depth paths");
    c.surface.albedo = get_string(s["albedo"], "surface albedo");
    c.surface.normal = get_string(s["normal"], "surface normal");
    c.surface.depth = get_string(s["depth"], "surface depth");
  }

  if (j.contains("weights")) {
    const json& w = j["weights"];
    expect_keys(w, "weights",
                {"albedo", "normal", "depth", "light", "visible", "reg", "rerender", "local",
                 "si"});
    if (w.contains("albedo")) c.weights.lambda_albedo = get_number(w["albedo"], "weights.albedo");
    if (w.contains("normal")) c.weights.lambda_normal = get_number(w["normal"], "weights.normal");
    if (w.contains("depth")) c.weights.lambda_depth = get_number(w["depth"], "weights.depth");
    if (w.contains("light")) c.weights.lambda_light = get_number(w["light"], "weights.light");
    if (w.contains("visible"))
      c.weights.lambda_visible = get_number(w["visible"], "weights.visible");
    if (w.contains("reg")) c.weights.lambda_reg = get_number(w["reg"], "weights.reg");
    if (w.contains("rerender"))
      c.weights.lambda_rerender = get_number(w["rerender"], "weights.rerender");
    if (w.contains("local")) c.weights.lambda_local = get_number(w["local"], "weights.local");
    if (w.contains("si")) c.weights.lambda_si = get_number(w["si"], "weights.si");
    c.weights.validate();
  }

  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    expect_keys(o, "optimizer",
                {"iterations", "learning_rate", "beta1", "beta2", "epsilon", "pixels_per_step",
                 "history_every", "optimize_surface"});
    if (o.contains("iterations")) c.fit.iterations = get_int(o["iterations"], "iterations");
    if (o.contains("learning_rate"))
      c.fit.learning_rate = get_number(o["learning_rate"], "learning_rate");
    if (o.contains("beta1")) c.fit.beta1 = get_number(o["beta1"], "beta1");
    if (o.contains("beta2")) c.fit.beta2 = get_number(o["beta2"], "beta2");
    if (o.contains("epsilon")) c.fit.epsilon = get_number(o["epsilon"], "epsilon");
    if (o.contains("pixels_per_step"))
      c.fit.pixels_per_step = get_int(o["pixels_per_step"], "pixels_per_step");
    if (o.contains("history_every"))
      c.fit.history_every = get_int(o["history_every"], "history_every");
    if (o.contains("optimize_surface"))
      c.fit.optimize_surface = get_bool(o["optimize_surface"], "optimize_surface");
  }
  c.fit.seed = c.seed;

  if (j.contains("render")) {
    const json& r = j["render"];
    expect_keys(r, "render", {"n_samples", "mode", "quad_rays", "share_neighbors", "tau"});
    if (r.contains("n_samples"))
      c.fit.render.composite.n_samples = get_int(r["n_samples"], "render n_samples");
    if (r.contains("mode")) {
      std::string m = get_string(r["mode"], "render mode");
      if (m == "trilinear")
        c.fit.render.composite.mode = SampleMode::kTrilinear;
      else if (m == "nearest")
        c.fit.render.composite.mode = SampleMode::kNearest;
      else
        throw ValidationError("config: render mode must be \"trilinear\" or \"nearest\"");
    }
    if (r.contains("quad_rays"))
      c.fit.render.quad_rays = get_int(r["quad_rays"], "render quad_rays");
    if (r.contains("share_neighbors"))
      c.fit.render.share_neighbors = get_bool(r["share_neighbors"], "render share_neighbors");
    if (r.contains("tau")) c.fit.render.tau = get_number(r["tau"], "render tau");
  }

  c.fit.validate();
  return c;
}

void save_scene_config(const std::string& path, const SceneConfig& c) {
  json j;
  j["dims"] = json::array({c.dims.x, c.dims.y, c.dims.z});
  j["bounds"] = {{"min", vec3_json(c.bounds.min)}, {"max", vec3_json(c.bounds.max)}};
  j["seed"] = c.seed;

  json init;
  if (!c.initial.path.empty()) init["volume"] = c.initial.path;
  init["alpha"] = c.initial.alpha;
  init["color"] = vec3_json(c.initial.color);
  init["sigma"] = c.initial.sigma;
  j["initial"] = init;

  j["cameras"] = json::array();
  for (const Camera& cam : c.cameras) j["cameras"].push_back(camera_json(cam));
  j["observations"] = json::array();
  for (const ObservationEntry& e : c.observations) j["observations"].push_back(observation_json(e));

  if (!c.surface.albedo.empty())
    j["surface"] = {{"albedo", c.surface.albedo},
                    {"normal", c.surface.normal},
                    {"depth", c.surface.depth}};

  j["weights"] = {{"albedo", c.weights.lambda_albedo}, {"normal", c.weights.lambda_normal},
                  {"depth", c.weights.lambda_depth},   {"light", c.weights.lambda_light},
                  {"visible", c.weights.lambda_visible}, {"reg", c.weights.lambda_reg},
                  {"rerender", c.weights.lambda_rerender}, {"local", c.weights.lambda_local},
                  {"si", c.weights.lambda_si}};
  j["optimizer"] = {{"iterations", c.fit.iterations},
                    {"learning_rate", c.fit.learning_rate},
                    {"beta1", c.fit.beta1},
                    {"beta2", c.fit.beta2},
                    {"epsilon", c.fit.epsilon},
                    {"pixels_per_step", c.fit.pixels_per_step},
                    {"history_every", c.fit.history_every},
                    {"optimize_surface", c.fit.optimize_surface}};
  j["render"] = {
      {"n_samples", c.fit.render.composite.n_samples},
      {"mode", c.fit.render.composite.mode == SampleMode::kTrilinear ? "trilinear" : "nearest"},
      {"quad_rays", c.fit.render.quad_rays},
      {"share_neighbors", c.fit.render.share_neighbors},
      {"tau", c.fit.render.tau}};

  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write " + path);
  f << j.dump(2) << "\n";
  if (!f) throw ValidationError("failed writing " + path);
}

Camera load_camera(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": JSON parse error: " + e.what());
  }
  return parse_camera(j, "the camera file");
}

void save_camera(const std::string& path, const Camera& camera) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write " + path);
  f << camera_json(camera).dump(2) << "\n";
}

std::string resolve_path(const std::string& config_path, const std::string& relative) {
  std::filesystem::path rel(relative);
  if (rel.is_absolute()) return relative;
  return (std::filesystem::path(config_path).parent_path() / rel).string();
}

LoadedScene load_scene(const std::string& config_path) {
  LoadedScene s;
  s.config = load_scene_config(config_path);
  const SceneConfig& c = s.config;

  if (!c.initial.path.empty()) {
    s.initial = read_vsg1(resolve_path(config_path, c.initial.path));
    if (s.initial.nx != c.dims.x || s.initial.ny != c.dims.y || s.initial.nz != c.dims.z)
      throw ValidationError("config: initial volume dimensions disagree with dims");
  } else {
    s.initial = VsgVolume::zeros(c.dims.x, c.dims.y, c.dims.z, c.bounds);
    const double sraw = raw_from_sigma(c.initial.sigma);
    for (int z = 0; z < c.dims.z; ++z)
      for (int y = 0; y < c.dims.y; ++y)
        for (int x = 0; x < c.dims.x; ++x)
          s.initial.set_record(x, y, z, c.initial.alpha, c.initial.color, Vec3{}, sraw);
  }

  for (const ObservationEntry& e : c.observations) {
    Observation o;
    o.image = read_image(resolve_path(config_path, e.image));
    if (e.kind == "panorama") {
      o.kind = ObservationKind::kPanorama;
      o.position = e.position;
      if (e.has_orientation) o.orientation = e.orientation;
    } else {
      o.camera = c.cameras[size_t(e.camera)];
      if (e.kind == "perspective") {
        o.kind = ObservationKind::kPerspective;
        o.depth = read_image(resolve_path(config_path, e.depth));
      } else if (e.kind == "albedo") {
        o.kind = ObservationKind::kAlbedoGt;
        o.mask = e.mask.empty() ? Image::constant(o.image.width, o.image.height, 1, 1.0)
                                : read_image(resolve_path(config_path, e.mask));
      } else if (e.kind == "normal") {
        o.kind = ObservationKind::kNormalGt;
      } else {
        o.kind = ObservationKind::kDepthGt;
      }
    }
    o.validate();
    s.observations.push_back(std::move(o));
  }

  if (!c.surface.albedo.empty()) {
    s.surf.albedo = read_image(resolve_path(config_path, c.surface.albedo));
    s.surf.normal = read_image(resolve_path(config_path, c.surface.normal));
    s.surf.depth = read_image(resolve_path(config_path, c.surface.depth));
    s.surf.validate();
  }
  return s;
}

}  // namespace vsg
