#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "vsglight/io.h"
#include "vsglight/math.h"
#include "vsglight/rng.h"
#include "vsglight/volume.h"

using namespace vsg;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case, removed on scope exit.
struct TempDir {
  fs::path dir;
  TempDir() {
    static int counter = 0;
    dir = fs::temp_directory_path() /
          ("vsglight-io-" + std::to_string(++counter) + "-" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

template <typename E, typename F>
std::string thrown_message(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  return "<no exception>";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

std::string read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(bool(f));
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  REQUIRE(bool(f));
  f.write(bytes.data(), std::streamsize(bytes.size()));
}

// Patch a little-endian f32 into a byte string (file offsets, not records).
void patch_f32(std::string& bytes, size_t offset, float value) {
  uint32_t u;
  std::memcpy(&u, &value, 4);
  for (int i = 0; i < 4; ++i) bytes[offset + size_t(i)] = char((u >> (8 * i)) & 0xff);
}

void patch_u32(std::string& bytes, size_t offset, uint32_t u) {
  for (int i = 0; i < 4; ++i) bytes[offset + size_t(i)] = char((u >> (8 * i)) & 0xff);
}

// Every channel value chosen representable in f32 so the file round trip can
// be compared bitwise.
VsgVolume representable_volume() {
  VsgVolume v = VsgVolume::zeros(3, 2, 2, AABB{{-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}});
  Rng rng(11, "test.io.volume");
  for (int i = 0; i < v.voxel_count(); ++i) {
    double a = double(float(rng.uniform(0.0, 1.0)));
    Vec3 color{double(float(rng.uniform(0.0, 4.0))), double(float(rng.uniform(0.0, 4.0))),
               double(float(rng.uniform(0.0, 4.0)))};
    Vec3 axis{double(float(rng.uniform(-1.0, 1.0))), double(float(rng.uniform(-1.0, 1.0))),
              double(float(rng.uniform(-1.0, 1.0)))};
    double sigma = double(float(rng.uniform(0.01, 3.0)));
    int x = i % v.nx, y = (i / v.nx) % v.ny, z = i / (v.nx * v.ny);
    v.set_record(x, y, z, a, color, axis, raw_from_sigma(sigma));
  }
  // Boundary opacities must survive the trip too.
  v.at(0, 0, 0, kChAlpha) = 0.0;
  v.at(1, 0, 0, kChAlpha) = 1.0;
  return v;
}

}  // namespace

TEST_CASE("pfm round trips float images bitwise") {
  TempDir tmp;
  Rng rng(3, "test.io.pfm");

  Image rgb = Image::zeros(5, 4, 3);
  for (size_t i = 0; i < rgb.data.size(); ++i)
    rgb.data[i] = double(float(rng.uniform(-2.0, 3.0)));
  rgb.at(0, 0, 0) = 0.0;
  rgb.at(1, 0, 1) = 1.5e8;

  const std::string path = tmp.path("img.pfm");
  write_pfm(path, rgb);
  Image back = read_pfm(path);
  REQUIRE(back.width == 5);
  REQUIRE(back.height == 4);
  REQUIRE(back.channels == 3);
  for (size_t i = 0; i < rgb.data.size(); ++i) CHECK(back.data[i] == rgb.data[i]);

  Image gray = Image::zeros(3, 3, 1);
  for (size_t i = 0; i < gray.data.size(); ++i)
    gray.data[i] = double(float(rng.uniform(0.0, 10.0)));
  const std::string gpath = tmp.path("gray.pfm");
  write_pfm(gpath, gray);
  Image gback = read_pfm(gpath);
  REQUIRE(gback.channels == 1);
  for (size_t i = 0; i < gray.data.size(); ++i) CHECK(gback.data[i] == gray.data[i]);
}

TEST_CASE("pfm read rejects malformed files") {
  TempDir tmp;
  CHECK_THROWS_AS(read_pfm(tmp.path("missing.pfm")), ValidationError);

  const std::string bad = tmp.path("bad.pfm");
  write_bytes(bad, "P5\n3 3\n255\nxxxxxxxxx");
  CHECK_THROWS_AS(read_pfm(bad), ValidationError);

  Image img = Image::zeros(4, 2, 3);
  const std::string trunc = tmp.path("trunc.pfm");
  write_pfm(trunc, img);
  std::string bytes = read_bytes(trunc);
  write_bytes(trunc, bytes.substr(0, bytes.size() - 5));
  std::string msg = thrown_message<ValidationError>([&] { read_pfm(trunc); });
  CHECK(contains(msg, trunc));
}

TEST_CASE("png round trips within quantization error") {
  TempDir tmp;

  Image rgb = Image::zeros(8, 4, 3);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 3; ++c)
        rgb.at(x, y, c) = (x + 8.0 * y + 32.0 * c) / (32.0 * 3.0 - 1.0);

  const std::string path = tmp.path("img.png");
  write_png(path, rgb);
  Image back = read_png(path);
  REQUIRE(back.width == 8);
  REQUIRE(back.height == 4);
  REQUIRE(back.channels == 3);
  // One 8-bit step in gamma space maps to at most ~0.0044 linear near 1.
  for (size_t i = 0; i < rgb.data.size(); ++i)
    CHECK(std::abs(back.data[i] - rgb.data[i]) < 0.005);

  // Quantization is a projection: a second trip changes nothing.
  const std::string path2 = tmp.path("img2.png");
  write_png(path2, back);
  Image back2 = read_png(path2);
  for (size_t i = 0; i < back.data.size(); ++i) CHECK(back2.data[i] == back.data[i]);

  Image gray = Image::constant(3, 2, 1, 0.5);
  const std::string gpath = tmp.path("gray.png");
  write_png(gpath, gray);
  Image gback = read_png(gpath);
  REQUIRE(gback.channels == 1);
  CHECK(gback.at(0, 0, 0) == doctest::Approx(0.5).epsilon(0.01));

  // Out-of-range values clamp to the displayable range.
  Image wild = Image::zeros(2, 1, 3);
  wild.at(0, 0, 0) = 1.5;
  wild.at(1, 0, 0) = -0.25;
  const std::string wpath = tmp.path("wild.png");
  write_png(wpath, wild);
  Image wback = read_png(wpath);
  CHECK(wback.at(0, 0, 0) == 1.0);
  CHECK(wback.at(1, 0, 0) == 0.0);

  CHECK_THROWS_AS(read_png(tmp.path("missing.png")), ValidationError);
  const std::string notpng = tmp.path("fake.png");
  write_bytes(notpng, "definitely not a png");
  CHECK_THROWS_AS(read_png(notpng), ValidationError);
}

TEST_CASE("image io dispatches on the file extension") {
  TempDir tmp;
  Image img = Image::constant(4, 4, 3, 0.25);

  write_image(tmp.path("a.pfm"), img);
  Image a = read_image(tmp.path("a.pfm"));
  CHECK(a.at(2, 2, 1) == 0.25);

  write_image(tmp.path("b.png"), img);
  Image b = read_image(tmp.path("b.png"));
  CHECK(b.at(2, 2, 1) == doctest::Approx(0.25).epsilon(0.02));

  CHECK_THROWS_AS(write_image(tmp.path("c.jpg"), img), ValidationError);
  CHECK_THROWS_AS(read_image(tmp.path("c.jpg")), ValidationError);
  std::string msg =
      thrown_message<ValidationError>([&] { write_image(tmp.path("noext"), img); });
  CHECK(contains(msg, "noext"));
}

TEST_CASE("vsg1 volume files round trip bitwise") {
  TempDir tmp;
  VsgVolume vol = representable_volume();

  const std::string path = tmp.path("vol.vsg");
  write_vsg1(path, vol);

  // Fixed-size binary layout: header plus eight f32 channels per voxel.
  CHECK(fs::file_size(path) == 40 + size_t(vol.voxel_count()) * 32);

  VsgVolume back = read_vsg1(path);
  REQUIRE(back.nx == vol.nx);
  REQUIRE(back.ny == vol.ny);
  REQUIRE(back.nz == vol.nz);
  CHECK(back.bounds.min.x == vol.bounds.min.x);
  CHECK(back.bounds.max.z == vol.bounds.max.z);

  for (int i = 0; i < vol.voxel_count(); ++i) {
    for (int c = 0; c < kVolumeChannels; ++c) {
      if (c == kChSigmaRaw) continue;
      CHECK(back.data[size_t(i) * kVolumeChannels + c] == vol.data[size_t(i) * kVolumeChannels + c]);
    }
    // Bandwidth is stored decoded; the raw value survives to f32 precision.
    double s0 = sigma_from_raw(vol.data[size_t(i) * kVolumeChannels + kChSigmaRaw]);
    double s1 = sigma_from_raw(back.data[size_t(i) * kVolumeChannels + kChSigmaRaw]);
    CHECK(s1 == doctest::Approx(s0).epsilon(1e-12));
  }

  // Rewriting the loaded volume reproduces the file byte for byte.
  const std::string path2 = tmp.path("vol2.vsg");
  write_vsg1(path2, back);
  CHECK(read_bytes(path) == read_bytes(path2));
}

TEST_CASE("vsg1 write validates the volume first") {
  TempDir tmp;
  VsgVolume vol = VsgVolume::zeros(2, 2, 2, AABB{{-1, -1, -1}, {1, 1, 1}});
  vol.at(0, 0, 0, kChAlpha) = 2.0;
  CHECK_THROWS_AS(write_vsg1(tmp.path("bad.vsg"), vol), ValidationError);
}

TEST_CASE("vsg1 read names the offending byte") {
  TempDir tmp;
  const std::string good = tmp.path("good.vsg");
  write_vsg1(good, representable_volume());
  const std::string valid = read_bytes(good);
  const std::string path = tmp.path("corrupt.vsg");

  auto fail_msg = [&](const std::string& bytes) {
    write_bytes(path, bytes);
    return thrown_message<ValidationError>([&] { read_vsg1(path); });
  };

  SUBCASE("truncated header") {
    std::string msg = fail_msg(valid.substr(0, 10));
    CHECK(contains(msg, "truncated VSG1 header"));
    CHECK(contains(msg, "(byte 10)"));
  }
  SUBCASE("bad magic") {
    std::string bytes = valid;
    bytes[0] = 'X';
    std::string msg = fail_msg(bytes);
    CHECK(contains(msg, "bad magic"));
    CHECK(contains(msg, "(byte 0)"));
  }
  SUBCASE("zero dimension") {
    std::string bytes = valid;
    patch_u32(bytes, 4, 0);
    std::string msg = fail_msg(bytes);
    CHECK(contains(msg, "dimensions"));
    CHECK(contains(msg, "(byte 4)"));
  }
  SUBCASE("nonpositive extent") {
    std::string bytes = valid;
    patch_f32(bytes, 28, 0.0f);
    std::string msg = fail_msg(bytes);
    CHECK(contains(msg, "extent must be positive"));
    CHECK(contains(msg, "(byte 28)"));
  }
  SUBCASE("truncated payload") {
    std::string msg = fail_msg(valid.substr(0, valid.size() - 4));
    CHECK(contains(msg, "(byte " + std::to_string(valid.size() - 4) + ")"));
  }
  SUBCASE("opacity out of range") {
    std::string bytes = valid;
    patch_f32(bytes, 40, 1.5f);
    std::string msg = fail_msg(bytes);
    CHECK(contains(msg, "opacity outside [0, 1]"));
    CHECK(contains(msg, "voxel 0 opacity"));
    CHECK(contains(msg, "(byte 40)"));
  }
  SUBCASE("non-finite color") {
    std::string bytes = valid;
    patch_f32(bytes, 44, std::numeric_limits<float>::quiet_NaN());
    std::string msg = fail_msg(bytes);
    CHECK(contains(msg, "color must be finite and nonnegative"));
    CHECK(contains(msg, "(byte 44)"));
  }
  SUBCASE("non-finite axis") {
    std::string bytes = valid;
    patch_f32(bytes, 56, std::numeric_limits<float>::infinity());
    std::string msg = fail_msg(bytes);
    CHECK(contains(msg, "lobe axis must be finite"));
    CHECK(contains(msg, "(byte 56)"));
  }
  SUBCASE("bandwidth too small") {
    std::string bytes = valid;
    patch_f32(bytes, 68, 5e-4f);
    std::string msg = fail_msg(bytes);
    CHECK(contains(msg, "bandwidth must exceed 1e-3"));
    CHECK(contains(msg, "(byte 68)"));
  }
  SUBCASE("missing file") {
    std::string msg =
        thrown_message<ValidationError>([&] { read_vsg1(tmp.path("absent.vsg")); });
    CHECK(contains(msg, "cannot open"));
  }
}

TEST_CASE("scene config applies defaults and stays strict") {
  TempDir tmp;
  const std::string path = tmp.path("scene.json");

  write_bytes(path, R"({"dims": [4, 5, 6], "bounds": {"min": [-1, -1, -1], "max": [1, 1, 1]}})");
  SceneConfig c = load_scene_config(path);
  CHECK(c.dims.x == 4);
  CHECK(c.dims.y == 5);
  CHECK(c.dims.z == 6);
  CHECK(c.bounds.min.x == -1.0);
  CHECK(c.bounds.max.y == 1.0);
  CHECK(c.seed == 0);
  CHECK(c.initial.path.empty());
  CHECK(c.initial.alpha == 0.1);
  CHECK(c.initial.sigma == 1.0);
  CHECK(c.cameras.empty());
  CHECK(c.observations.empty());
  CHECK(c.surface.albedo.empty());
  CHECK(c.fit.iterations == FitOptions{}.iterations);
  CHECK(c.weights.lambda_light == LossWeights{}.lambda_light);

  SUBCASE("unknown top-level key") {
    write_bytes(path, R"({"dims": [4, 4, 4], "bounds": {"min": [-1, -1, -1], "max": [1, 1, 1]},
                          "frobnicate": 1})");
    std::string msg = thrown_message<ValidationError>([&] { load_scene_config(path); });
    CHECK(contains(msg, "unknown key \"frobnicate\""));
  }
  SUBCASE("unknown nested key") {
    write_bytes(path, R"({"dims": [4, 4, 4], "bounds": {"min": [-1, -1, -1], "max": [1, 1, 1]},
                          "weights": {"albedo": 1.0, "shiny": 2.0}})");
    std::string msg = thrown_message<ValidationError>([&] { load_scene_config(path); });
    CHECK(contains(msg, "unknown key \"shiny\""));
    CHECK(contains(msg, "weights"));
  }
  SUBCASE("required keys") {
    write_bytes(path, R"({"bounds": {"min": [-1, -1, -1], "max": [1, 1, 1]}})");
    CHECK_THROWS_AS(load_scene_config(path), ValidationError);
    write_bytes(path, R"({"dims": [4, 4, 4]})");
    CHECK_THROWS_AS(load_scene_config(path), ValidationError);
  }
  SUBCASE("malformed values") {
    write_bytes(path, R"({"dims": [4, 4], "bounds": {"min": [-1, -1, -1], "max": [1, 1, 1]}})");
    CHECK_THROWS_AS(load_scene_config(path), ValidationError);
    write_bytes(path, R"({"dims": [4, 4, 4], "bounds": {"min": [1, -1, -1], "max": [1, 1, 1]}})");
    CHECK_THROWS_AS(load_scene_config(path), ValidationError);
    write_bytes(path, "{ not json");
    std::string msg = thrown_message<ValidationError>([&] { load_scene_config(path); });
    CHECK(contains(msg, "parse error"));
  }
  SUBCASE("camera index out of range") {
    write_bytes(path, R"({"dims": [4, 4, 4], "bounds": {"min": [-1, -1, -1], "max": [1, 1, 1]},
                          "observations": [{"kind": "normal", "image": "n.pfm", "camera": 0}]})");
    std::string msg = thrown_message<ValidationError>([&] { load_scene_config(path); });
    CHECK(contains(msg, "camera index out of range"));
  }
  SUBCASE("unknown observation kind") {
    write_bytes(path, R"({"dims": [4, 4, 4], "bounds": {"min": [-1, -1, -1], "max": [1, 1, 1]},
                          "observations": [{"kind": "specular", "image": "s.pfm"}]})");
    CHECK_THROWS_AS(load_scene_config(path), ValidationError);
  }
}

TEST_CASE("scene config save and load are idempotent") {
  TempDir tmp;

  SceneConfig c;
  c.dims = {8, 6, 4};
  c.bounds = AABB{{-1.5, -1.0, -0.5}, {1.5, 1.0, 0.5}};
  c.seed = 42;
  c.initial.path = "init.vsg";
  c.initial.alpha = 0.2;
  c.initial.color = {0.3, 0.4, 0.5};
  c.initial.sigma = 1.25;
  c.cameras.push_back(
      Camera::look_at(12, 9, 0.9, Vec3{0.1, -0.2, -1.3}, Vec3{0, 0, 0}, Vec3{0, -1, 0}));

  ObservationEntry pano;
  pano.kind = "panorama";
  pano.image = "pano.pfm";
  pano.position = {0.25, -0.125, 0.5};
  pano.has_orientation = true;
  pano.orientation = Mat3::from_columns({0, 1, 0}, {-1, 0, 0}, {0, 0, 1});
  c.observations.push_back(pano);

  ObservationEntry persp;
  persp.kind = "perspective";
  persp.image = "view.pfm";
  persp.depth = "viewdepth.pfm";
  persp.camera = 0;
  c.observations.push_back(persp);

  ObservationEntry albedo;
  albedo.kind = "albedo";
  albedo.image = "albedo.png";
  albedo.mask = "mask.png";
  albedo.camera = 0;
  c.observations.push_back(albedo);

  ObservationEntry albedo_nomask = albedo;
  albedo_nomask.mask.clear();
  c.observations.push_back(albedo_nomask);

  ObservationEntry normal;
  normal.kind = "normal";
  normal.image = "normal.pfm";
  normal.camera = 0;
  c.observations.push_back(normal);

  c.surface.albedo = "surf_albedo.pfm";
  c.surface.normal = "surf_normal.pfm";
  c.surface.depth = "surf_depth.pfm";
  c.weights.lambda_light = 2.0;
  c.weights.lambda_rerender = 0.75;
  c.fit.iterations = 123;
  c.fit.learning_rate = 0.05;
  c.fit.pixels_per_step = 777;
  c.fit.render.composite.n_samples = 96;
  c.fit.render.composite.mode = SampleMode::kNearest;
  c.fit.render.quad_rays = 64;
  c.fit.render.share_neighbors = true;
  c.fit.render.tau = 0.85;

  const std::string a = tmp.path("a.json");
  const std::string b = tmp.path("b.json");
  save_scene_config(a, c);
  SceneConfig back = load_scene_config(a);

  CHECK(back.dims.x == 8);
  CHECK(back.bounds.min.x == -1.5);
  CHECK(back.seed == 42);
  CHECK(back.initial.path == "init.vsg");
  CHECK(back.initial.sigma == 1.25);
  REQUIRE(back.cameras.size() == 1);
  CHECK(back.cameras[0].fx == c.cameras[0].fx);
  CHECK(back.cameras[0].position.z == c.cameras[0].position.z);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(back.cameras[0].rotation.m[i][j] == c.cameras[0].rotation.m[i][j]);
  REQUIRE(back.observations.size() == 5);
  CHECK(back.observations[0].kind == "panorama");
  CHECK(back.observations[0].has_orientation);
  CHECK(back.observations[0].orientation.m[0][1] == -1.0);
  CHECK(back.observations[1].depth == "viewdepth.pfm");
  CHECK(back.observations[2].mask == "mask.png");
  CHECK(back.observations[3].mask.empty());
  CHECK(back.observations[4].camera == 0);
  CHECK(back.surface.depth == "surf_depth.pfm");
  CHECK(back.weights.lambda_rerender == 0.75);
  CHECK(back.fit.iterations == 123);
  CHECK(back.fit.seed == 42);
  CHECK(back.fit.render.composite.mode == SampleMode::kNearest);
  CHECK(back.fit.render.share_neighbors);
  CHECK(back.fit.render.tau == 0.85);

  // The emitted form is canonical: saving the loaded config is byte-identical.
  save_scene_config(b, back);
  CHECK(read_bytes(a) == read_bytes(b));
}

TEST_CASE("camera json round trips") {
  TempDir tmp;
  Camera cam = Camera::look_at(20, 15, 1.1, Vec3{0.5, 0.25, -2.0}, Vec3{0, 0.125, 0},
                               Vec3{0, -1, 0});
  const std::string path = tmp.path("cam.json");
  save_camera(path, cam);
  Camera back = load_camera(path);
  CHECK(back.width == 20);
  CHECK(back.height == 15);
  CHECK(back.fx == cam.fx);
  CHECK(back.cy == cam.cy);
  CHECK(back.position.x == 0.5);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(back.rotation.m[i][j] == cam.rotation.m[i][j]);

  write_bytes(path, R"({"width": 4, "height": 4, "fx": 5, "fy": 5, "cx": 2, "cy": 2,
                        "position": [0, 0, 0],
                        "rotation": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "zoom": 2})");
  std::string msg = thrown_message<ValidationError>([&] { load_camera(path); });
  CHECK(contains(msg, "unknown key \"zoom\""));
}

TEST_CASE("relative paths resolve against the config directory") {
  CHECK(resolve_path("/a/b/cfg.json", "img.png") == "/a/b/img.png");
  CHECK(resolve_path("/a/b/cfg.json", "sub/img.png") == "/a/b/sub/img.png");
  CHECK(resolve_path("/a/b/cfg.json", "/abs/img.png") == "/abs/img.png");
  CHECK(resolve_path("cfg.json", "img.png") == "img.png");
}

TEST_CASE("load_scene assembles fit inputs from disk") {
  TempDir tmp;

  VsgVolume init = representable_volume();
  // load_scene checks dims agreement, so the config must use 3 x 2 x 2.
  write_vsg1(tmp.path("init.vsg"), init);

  Image pano = Image::zeros(16, 8, 3);
  Rng rng(5, "test.io.scene");
  for (size_t i = 0; i < pano.data.size(); ++i)
    pano.data[i] = double(float(rng.uniform(0.0, 1.0)));
  write_pfm(tmp.path("pano.pfm"), pano);

  SceneConfig c;
  c.dims = {3, 2, 2};
  c.bounds = init.bounds;
  c.initial.path = "init.vsg";
  ObservationEntry e;
  e.kind = "panorama";
  e.image = "pano.pfm";
  e.position = {0.25, 0.0, -0.5};
  c.observations.push_back(e);
  const std::string cfg = tmp.path("scene.json");
  save_scene_config(cfg, c);

  LoadedScene s = load_scene(cfg);
  CHECK(s.initial.nx == 3);
  for (int i = 0; i < init.voxel_count() * kVolumeChannels; ++i) {
    if (i % kVolumeChannels == kChSigmaRaw) continue;
    CHECK(s.initial.data[size_t(i)] == init.data[size_t(i)]);
  }
  REQUIRE(s.observations.size() == 1);
  CHECK(s.observations[0].kind == ObservationKind::kPanorama);
  CHECK(s.observations[0].position.x == 0.25);
  CHECK(s.observations[0].image.data == pano.data);
  CHECK(s.surf.albedo.data.empty());

  SUBCASE("uniform fill when no volume path is given") {
    c.initial.path.clear();
    c.initial.alpha = 0.2;
    c.initial.color = {0.3, 0.4, 0.5};
    c.initial.sigma = 1.25;
    save_scene_config(cfg, c);
    LoadedScene u = load_scene(cfg);
    CHECK(u.initial.at(1, 1, 0, kChAlpha) == 0.2);
    CHECK(u.initial.at(2, 0, 1, kChColorG) == 0.4);
    CHECK(u.initial.at(0, 1, 1, kChAxisX) == 0.0);
    CHECK(u.initial.at(1, 0, 0, kChSigmaRaw) == raw_from_sigma(1.25));
  }

  SUBCASE("initial volume dims must match the config") {
    c.dims = {4, 4, 4};
    save_scene_config(cfg, c);
    std::string msg = thrown_message<ValidationError>([&] { load_scene(cfg); });
    CHECK(contains(msg, "dimensions disagree"));
  }

  SUBCASE("albedo observations default to a full mask") {
    Camera cam;
    cam.width = 6;
    cam.height = 5;
    cam.fx = cam.fy = 7.0;
    cam.cx = 3.0;
    cam.cy = 2.5;
    c.cameras.push_back(cam);
    Image alb = Image::constant(6, 5, 3, 0.5);
    write_pfm(tmp.path("albedo.pfm"), alb);
    ObservationEntry a;
    a.kind = "albedo";
    a.image = "albedo.pfm";
    a.camera = 0;
    c.observations.push_back(a);
    save_scene_config(cfg, c);
    LoadedScene la = load_scene(cfg);
    REQUIRE(la.observations.size() == 2);
    const Observation& obs = la.observations[1];
    CHECK(obs.kind == ObservationKind::kAlbedoGt);
    REQUIRE(obs.mask.channels == 1);
    CHECK(obs.mask.width == 6);
    CHECK(obs.mask.at(5, 4, 0) == 1.0);
    CHECK(obs.camera.fx == 7.0);
  }

  SUBCASE("surface buffers load when configured") {
    Camera cam;
    cam.width = 6;
    cam.height = 5;
    cam.fx = cam.fy = 7.0;
    cam.cx = 3.0;
    cam.cy = 2.5;
    c.cameras.push_back(cam);
    Image alb = Image::constant(6, 5, 3, 0.25);
    Image nrm = Image::zeros(6, 5, 3);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 6; ++x) {
        nrm.at(x, y, 0) = 0.0;
        nrm.at(x, y, 1) = 0.0;
        nrm.at(x, y, 2) = -1.0;
      }
    Image dep = Image::constant(6, 5, 1, 1.5);
    write_pfm(tmp.path("sa.pfm"), alb);
    write_pfm(tmp.path("sn.pfm"), nrm);
    write_pfm(tmp.path("sd.pfm"), dep);
    c.surface.albedo = "sa.pfm";
    c.surface.normal = "sn.pfm";
    c.surface.depth = "sd.pfm";
    save_scene_config(cfg, c);
    LoadedScene ls = load_scene(cfg);
    CHECK(ls.surf.width() == 6);
    CHECK(ls.surf.height() == 5);
    CHECK(ls.surf.albedo.at(2, 2, 0) == 0.25);
    CHECK(ls.surf.normal.at(1, 1, 2) == -1.0);
    CHECK(ls.surf.depth.at(0, 0, 0) == 1.5);
  }
}
