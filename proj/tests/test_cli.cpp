#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "vsglight/cli.h"
#include "vsglight/io.h"
#include "vsglight/shading.h"
#include "vsglight/volume.h"

using namespace vsg;
namespace fs = std::filesystem;

namespace {

int run(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"vsglight"};
  owned.insert(owned.end(), args);
  std::vector<const char*> argv;
  for (const std::string& a : owned) argv.push_back(a.c_str());
  return run_cli(int(argv.size()), argv.data());
}

struct TempDir {
  fs::path dir;
  TempDir() {
    static int counter = 0;
    dir = fs::temp_directory_path() /
          ("vsglight-cli-" + std::to_string(++counter) + "-" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

// 4^3 volume with one bright voxel, written to disk for the subcommands.
std::string write_emitter_volume(const TempDir& tmp) {
  VsgVolume v = VsgVolume::zeros(4, 4, 4, AABB{{-1, -1, -1}, {1, 1, 1}});
  v.set_record(2, 1, 2, 0.875, Vec3{3.0, 2.0, 1.0}, Vec3{0.25, -0.5, 0.5},
               raw_from_sigma(1.5));
  const std::string path = tmp.path("vol.vsg");
  write_vsg1(path, v);
  return path;
}

std::string write_small_camera(const TempDir& tmp, int w, int h) {
  Camera cam;
  cam.width = w;
  cam.height = h;
  cam.fx = cam.fy = 1.2 * w;
  cam.cx = 0.5 * w;
  cam.cy = 0.5 * h;
  cam.position = {0.0, 0.0, -0.75};
  const std::string path = tmp.path("camera.json");
  save_camera(path, cam);
  return path;
}

std::string write_surf_dir(const TempDir& tmp, int w, int h) {
  SurfaceBuffers surf;
  surf.albedo = Image::constant(w, h, 3, 0.25);
  surf.normal = Image::zeros(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) surf.normal.at(x, y, 2) = -1.0;
  surf.depth = Image::constant(w, h, 1, 1.0);
  fs::create_directories(tmp.dir / "surf");
  write_pfm(tmp.path("surf/albedo.pfm"), surf.albedo);
  write_pfm(tmp.path("surf/normal.pfm"), surf.normal);
  write_pfm(tmp.path("surf/depth.pfm"), surf.depth);
  return tmp.path("surf");
}

}  // namespace

TEST_CASE("cli rejects bad invocations with exit code 1") {
  CHECK(run({}) == 1);
  CHECK(run({"no-such-command"}) == 1);
  CHECK(run({"render-pano"}) == 1);  // missing required options
  CHECK(run({"render-pano", "--volume", "x.vsg", "--pos", "0,0,0", "--bogus"}) == 1);
  CHECK(run({"--help"}) == 0);
}

TEST_CASE("render-pano writes panoramas and validates arguments") {
  TempDir tmp;
  const std::string vol = write_emitter_volume(tmp);

  const std::string out = tmp.path("pano.png");
  CHECK(run({"render-pano", "--volume", vol, "--pos", "0,0,0", "--height", "8", "--samples",
             "32", "--out", out}) == 0);
  Image pano = read_png(out);
  CHECK(pano.width == 16);
  CHECK(pano.height == 8);
  CHECK(pano.channels == 3);
  double peak = 0.0;
  for (double v : pano.data) peak = std::max(peak, v);
  CHECK(peak > 0.0);  // the emitter is visible somewhere

  SUBCASE("hdr output must be pfm") {
    CHECK(run({"render-pano", "--volume", vol, "--pos", "0,0,0", "--height", "4", "--hdr",
               "--out", tmp.path("p.png")}) == 1);
    const std::string hdr = tmp.path("p.pfm");
    CHECK(run({"render-pano", "--volume", vol, "--pos", "0,0,0", "--height", "4", "--samples",
               "32", "--hdr", "--out", hdr}) == 0);
    Image raw = read_pfm(hdr);
    CHECK(raw.width == 8);
    for (double v : raw.data) CHECK(v >= 0.0);
  }
  SUBCASE("empty volume renders black") {
    VsgVolume empty = VsgVolume::zeros(2, 2, 2, AABB{{-1, -1, -1}, {1, 1, 1}});
    const std::string epath = tmp.path("empty.vsg");
    write_vsg1(epath, empty);
    const std::string black = tmp.path("black.png");
    CHECK(run({"render-pano", "--volume", epath, "--pos", "0,0,0", "--height", "4", "--samples",
               "16", "--out", black}) == 0);
    for (double v : read_png(black).data) CHECK(v == 0.0);
  }
  SUBCASE("argument validation") {
    CHECK(run({"render-pano", "--volume", vol, "--pos", "0,0", "--out", out}) == 1);
    CHECK(run({"render-pano", "--volume", vol, "--pos", "a,b,c", "--out", out}) == 1);
    CHECK(run({"render-pano", "--volume", vol, "--pos", "0,0,0", "--height", "0"}) == 1);
    CHECK(run({"render-pano", "--volume", tmp.path("absent.vsg"), "--pos", "0,0,0"}) == 1);
  }
}

TEST_CASE("render-view writes the image and composited depth") {
  TempDir tmp;
  const std::string vol = write_emitter_volume(tmp);
  const std::string cam = write_small_camera(tmp, 8, 6);

  const std::string img = tmp.path("view.png");
  const std::string dep = tmp.path("view_depth.pfm");
  CHECK(run({"render-view", "--volume", vol, "--camera", cam, "--out-image", img, "--out-depth",
             dep, "--samples", "48"}) == 0);
  Image rgb = read_png(img);
  CHECK(rgb.width == 8);
  CHECK(rgb.height == 6);
  Image depth = read_pfm(dep);
  CHECK(depth.channels == 1);
  CHECK(depth.width == 8);
  for (double v : depth.data) CHECK(v >= 0.0);
}

TEST_CASE("rerender shades surfaces and reports the error image") {
  TempDir tmp;
  const std::string vol = write_emitter_volume(tmp);
  const std::string cam = write_small_camera(tmp, 4, 3);
  const std::string surf = write_surf_dir(tmp, 4, 3);

  const std::string render = tmp.path("rerender.png");
  CHECK(run({"rerender", "--volume", vol, "--surf", surf, "--camera", cam, "--K", "8",
             "--samples", "24", "--out-render", render}) == 0);
  Image r = read_png(render);
  CHECK(r.width == 4);
  CHECK(r.height == 3);

  // Feeding the re-render back as the observation makes E = I - render small
  // (only PNG quantization separates them).
  const std::string err = tmp.path("error.pfm");
  CHECK(run({"rerender", "--volume", vol, "--surf", surf, "--camera", cam, "--K", "8",
             "--samples", "24", "--image", render, "--out-render", tmp.path("r2.png"),
             "--out-error", err}) == 0);
  Image e = read_pfm(err);
  CHECK(e.channels == 3);
  for (double v : e.data) CHECK(std::abs(v) < 0.005);

  SUBCASE("resolution mismatches are validation failures") {
    const std::string cam6 = tmp.path("cam6.json");
    Camera c = load_camera(cam);
    c.width = 6;
    c.cx = 3.0;
    save_camera(cam6, c);
    CHECK(run({"rerender", "--volume", vol, "--surf", surf, "--camera", cam6}) == 1);
  }
}

TEST_CASE("insert composites a sphere into the observation") {
  TempDir tmp;
  const std::string vol = write_emitter_volume(tmp);
  const std::string cam = write_small_camera(tmp, 4, 3);
  const std::string surf = write_surf_dir(tmp, 4, 3);
  const std::string img = tmp.path("obs.png");
  write_png(img, Image::constant(4, 3, 3, 0.5));

  const std::string out = tmp.path("inserted.png");
  CHECK(run({"insert", "--volume", vol, "--image", img, "--surf", surf, "--camera", cam,
             "--sphere", "0,0,0.5,0.2", "--material", "mirror", "--K", "8", "--samples", "24",
             "--out", out}) == 0);
  Image m = read_png(out);
  CHECK(m.width == 4);
  CHECK(m.height == 3);

  CHECK(run({"insert", "--volume", vol, "--image", img, "--surf", surf, "--camera", cam,
             "--sphere", "0,0,0.5,0.2", "--material", "diffuse:0.5", "--K", "8", "--samples",
             "24", "--out", out}) == 0);

  SUBCASE("bad arguments") {
    CHECK(run({"insert", "--volume", vol, "--image", img, "--surf", surf, "--camera", cam,
               "--sphere", "0,0,0.5", "--material", "mirror"}) == 1);
    CHECK(run({"insert", "--volume", vol, "--image", img, "--surf", surf, "--camera", cam,
               "--sphere", "0,0,0.5,0.2", "--material", "chrome"}) == 1);
    CHECK(run({"insert", "--volume", vol, "--image", img, "--surf", surf, "--camera", cam,
               "--sphere", "0,0,0.5,0.2", "--material", "diffuse:1.5"}) == 1);
  }
}

TEST_CASE("gen-scene emits a complete, loadable scene directory") {
  TempDir tmp;
  const std::string dir = tmp.path("scene");
  CHECK(run({"gen-scene", "--preset", "two-emitters", "--out", dir}) == 0);

  for (const char* name : {"gt.vsg", "scene.json", "camera.json", "albedo.pfm", "normal.pfm",
                           "depth.pfm", "mask.pfm", "view.png", "view_depth.pfm", "pano_0.png",
                           "pano_1.png"})
    CHECK(fs::exists(fs::path(dir) / name));

  LoadedScene scene = load_scene((fs::path(dir) / "scene.json").string());
  CHECK(scene.config.dims.x == 32);
  REQUIRE(scene.observations.size() == 6);
  CHECK(scene.observations[0].kind == ObservationKind::kPanorama);
  CHECK(scene.observations[1].kind == ObservationKind::kPanorama);
  CHECK(scene.observations[2].kind == ObservationKind::kPerspective);
  CHECK(scene.observations[3].kind == ObservationKind::kAlbedoGt);
  CHECK(scene.observations[4].kind == ObservationKind::kNormalGt);
  CHECK(scene.observations[5].kind == ObservationKind::kDepthGt);
  CHECK(scene.surf.width() == scene.config.cameras[0].width);

  VsgVolume gt = read_vsg1((fs::path(dir) / "gt.vsg").string());
  CHECK(gt.nx == 32);

  CHECK(run({"gen-scene", "--preset", "unknown", "--out", tmp.path("x")}) == 1);
}

TEST_CASE("fit subcommand writes the volume and loss history") {
  TempDir tmp;

  // Ground-truth emitter, observed through one LDR panorama.
  VsgVolume gt = VsgVolume::zeros(4, 4, 4, AABB{{-1, -1, -1}, {1, 1, 1}});
  gt.set_record(2, 1, 2, 0.875, Vec3{3.0, 2.0, 1.0}, Vec3{0.25, -0.5, 0.5},
                raw_from_sigma(1.5));
  PanoramaConfig pcfg;
  pcfg.height = 8;
  pcfg.width = 16;
  pcfg.composite.n_samples = 32;
  Image pano = render_panorama(gt, Vec3{0, 0, 0}, pcfg);
  write_pfm(tmp.path("pano.pfm"), pano);

  SceneConfig c;
  c.dims = {4, 4, 4};
  c.bounds = gt.bounds;
  c.seed = 3;
  c.initial.alpha = 0.3;
  c.initial.color = {0.5, 0.5, 0.5};
  ObservationEntry e;
  e.kind = "panorama";
  e.image = "pano.pfm";
  c.observations.push_back(e);
  c.weights = LossWeights{};
  c.weights.lambda_albedo = c.weights.lambda_normal = c.weights.lambda_depth = 0.0;
  c.weights.lambda_visible = c.weights.lambda_rerender = 0.0;
  c.weights.lambda_light = 1.0;
  c.weights.lambda_reg = 0.01;
  c.fit.render.composite.n_samples = 32;
  c.fit.render.quad_rays = 8;
  const std::string cfg = tmp.path("scene.json");
  save_scene_config(cfg, c);

  const std::string out = tmp.path("fitted.vsg");
  const std::string csv = tmp.path("history.csv");
  CHECK(run({"fit", "--config", cfg, "--out", out, "--csv", csv, "--iterations", "6", "--lr",
             "0.05", "--pixels-per-step", "4096"}) == 0);

  VsgVolume fitted = read_vsg1(out);
  CHECK(fitted.nx == 4);

  std::ifstream f(csv);
  REQUIRE(bool(f));
  std::string header;
  std::getline(f, header);
  CHECK(header == "iteration,albedo,normal,depth,light,visible,reg,rerender,total");
  int rows = 0;
  for (std::string line; std::getline(f, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == 2);  // iteration 0 and the final iteration

  CHECK(run({"fit", "--config", tmp.path("absent.json")}) == 1);
}

TEST_CASE("grad-check subcommand reports pass and fail through exit codes") {
  CHECK(run({"grad-check", "--dims", "4", "--probes", "16", "--seed", "1"}) == 0);
  // An absurdly tight tolerance flips the same run to the numeric exit code.
  CHECK(run({"grad-check", "--dims", "4", "--probes", "4", "--seed", "1", "--tol", "1e-14"}) ==
        2);
}
