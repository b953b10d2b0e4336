#include "vsglight/cli.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vsglight/fit.h"
#include "vsglight/gradcheck.h"
#include "vsglight/io.h"
#include "vsglight/parallel.h"
#include "vsglight/scene.h"
#include "vsglight/shading.h"

namespace vsg {

namespace {

namespace fs = std::filesystem;

std::vector<double> parse_csv_numbers(const std::string& s, size_t n, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(std::string(what) + ": cannot parse \"" + item + "\" as a number");
    }
  }
  if (out.size() != n)
    throw ValidationError(std::string(what) + ": expected " + std::to_string(n) +
                          " comma-separated numbers, got " + std::to_string(out.size()));
  return out;
}

SurfaceBuffers load_surf_dir(const std::string& dir) {
  SurfaceBuffers surf;
  surf.albedo = read_pfm((fs::path(dir) / "albedo.pfm").string());
  surf.normal = read_pfm((fs::path(dir) / "normal.pfm").string());
  surf.depth = read_pfm((fs::path(dir) / "depth.pfm").string());
  surf.validate();
  return surf;
}

std::string lower_ext(const std::string& path) {
  size_t dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  for (char& c : ext) c = char(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

void write_history_csv(const std::string& path, const std::vector<FitHistoryRow>& history) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write " + path);
  f << "iteration,albedo,normal,depth,light,visible,reg,rerender,total\n";
  f.precision(12);
  for (const FitHistoryRow& row : history)
    f << row.iteration << "," << row.terms.albedo << "," << row.terms.normal << ","
      << row.terms.depth << "," << row.terms.light << "," << row.terms.visible << ","
      << row.terms.reg << "," << row.terms.rerender << "," << row.total << "\n";
}

// ---------------------------------------------------------------------------
// Subcommand options
// ---------------------------------------------------------------------------

struct PanoArgs {
  std::string volume, pos, out;
  bool hdr = false;
  int height = 128;
  int samples = 128;
};

struct ViewArgs {
  std::string volume, camera;
  std::string out_image = "view.png";
  std::string out_depth = "view_depth.pfm";
  int samples = 128;
};

struct RerenderArgs {
  std::string volume, surf, camera, image;
  std::string out_render = "rerender.png";
  std::string out_error = "error.pfm";
  int k = 50;
  bool share_neighbors = false;
  int samples = 128;
};

struct InsertArgs {
  std::string volume, image, surf, camera, sphere;
  std::string material = "mirror";
  std::string out = "composited.png";
  int k = 128;
  int samples = 128;
};

struct FitArgs {
  std::string config;
  std::string out = "fitted.vsg";
  std::string csv = "history.csv";
  int iterations = -1;
  double lr = 0.0;
  int64_t seed = -1;
  int pixels_per_step = 0;
};

struct GenSceneArgs {
  std::string preset, out;
};

struct GradCheckArgs {
  int probes = 1000;
  int64_t seed = 0;
  int dims = 16;
  double tol = 1e-4;
};

int cmd_render_pano(const PanoArgs& a) {
  VsgVolume volume = read_vsg1(a.volume);
  std::vector<double> p = parse_csv_numbers(a.pos, 3, "--pos");

  PanoramaConfig cfg;
  if (a.height < 1) throw ValidationError("--height must be positive");
  cfg.height = a.height;
  cfg.width = 2 * a.height;
  cfg.composite.n_samples = a.samples;
  cfg.hdr = a.hdr;
  Image pano = render_panorama(volume, {p[0], p[1], p[2]}, cfg);

  std::string out = a.out.empty() ? (a.hdr ? "pano.pfm" : "pano.png") : a.out;
  if (a.hdr && lower_ext(out) != ".pfm")
    throw ValidationError("HDR panoramas need a .pfm output path");
  write_image(out, pano);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_render_view(const ViewArgs& a) {
  VsgVolume volume = read_vsg1(a.volume);
  Camera camera = load_camera(a.camera);
  PerspectiveConfig cfg;
  cfg.composite.n_samples = a.samples;
  PerspectiveRender r = render_perspective_from_volume(volume, camera, cfg);
  write_image(a.out_image, r.rgb);
  write_pfm(a.out_depth, r.depth);
  std::cout << "wrote " << a.out_image << " and " << a.out_depth << "\n";
  return 0;
}

int cmd_rerender(const RerenderArgs& a) {
  VsgVolume volume = read_vsg1(a.volume);
  SurfaceBuffers surf = load_surf_dir(a.surf);
  Camera camera = load_camera(a.camera);
  if (surf.width() != camera.width || surf.height() != camera.height)
    throw ValidationError("surface buffers do not match the camera resolution");

  ShadeConfig cfg;
  cfg.quad_rays = a.k;
  cfg.share_neighbors = a.share_neighbors;
  cfg.composite.n_samples = a.samples;
  ShadeResult res = shade_lambertian(surf, camera, volume, cfg);
  write_image(a.out_render, res.ldr);
  std::cout << "wrote " << a.out_render << "\n";

  if (!a.image.empty()) {
    Image observed = read_image(a.image);
    if (!observed.same_shape(res.ldr))
      throw ValidationError("--image does not match the re-render resolution");
    Image error = Image::zeros(observed.width, observed.height, 3);
    for (size_t i = 0; i < error.data.size(); ++i)
      error.data[i] = observed.data[i] - res.ldr.data[i];
    write_pfm(a.out_error, error);
    std::cout << "wrote " << a.out_error << "\n";
  }
  return 0;
}

int cmd_insert(const InsertArgs& a) {
  VsgVolume volume = read_vsg1(a.volume);
  Image image = read_image(a.image);
  SurfaceBuffers surf = load_surf_dir(a.surf);
  Camera camera = load_camera(a.camera);
  if (image.channels != 3 || surf.width() != image.width || surf.height() != image.height ||
      camera.width != image.width || camera.height != image.height)
    throw ValidationError("image, surface buffers, and camera resolutions must agree");

  std::vector<double> s = parse_csv_numbers(a.sphere, 4, "--sphere");
  SphereInsertion sphere;
  sphere.center = {s[0], s[1], s[2]};
  sphere.radius = s[3];
  if (a.material == "mirror") {
    sphere.mirror = true;
  } else if (a.material.rfind("diffuse:", 0) == 0) {
    sphere.mirror = false;
    double albedo = parse_csv_numbers(a.material.substr(8), 1, "--material diffuse")[0];
    if (!(albedo >= 0.0 && albedo <= 1.0))
      throw ValidationError("--material diffuse albedo must lie in [0, 1]");
    sphere.albedo = {albedo, albedo, albedo};
  } else {
    throw ValidationError("--material must be \"mirror\" or \"diffuse:<albedo>\"");
  }

  InsertConfig cfg;
  cfg.quad_rays = a.k;
  cfg.composite.n_samples = a.samples;
  Image out = insert_sphere(volume, image, surf, camera, sphere, cfg);
  write_png(a.out, out);
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

int cmd_fit(const FitArgs& a) {
  LoadedScene scene = load_scene(a.config);
  FitOptions opt = scene.config.fit;
  if (scene.surf.width() > 0) opt.surf = scene.surf;
  if (a.iterations >= 0) opt.iterations = a.iterations;
  if (a.lr > 0.0) opt.learning_rate = a.lr;
  if (a.seed >= 0) opt.seed = uint64_t(a.seed);
  if (a.pixels_per_step > 0) opt.pixels_per_step = a.pixels_per_step;

  FitResult result = fit_volume(scene.initial, scene.observations, scene.config.weights, opt);
  write_vsg1(a.out, result.volume);
  write_history_csv(a.csv, result.history);
  std::cout << "wrote " << a.out << " and " << a.csv << "\n";
  std::cout << "best total loss " << result.best_total << " at iteration "
            << result.best_iteration << "\n";
  return 0;
}

int cmd_gen_scene(const GenSceneArgs& a) {
  ScenePreset preset = make_preset(a.preset);
  fs::create_directories(a.out);
  const fs::path dir(a.out);

  VsgVolume gt = voxelize(preset.scene, preset.dims);
  write_vsg1((dir / "gt.vsg").string(), gt);

  GeneratedObservations gen =
      generate_observations(preset.scene, preset.pano_positions, preset.pano_height, true);

  SceneConfig config;
  config.dims = preset.dims;
  config.bounds = preset.scene.bounds;
  config.seed = preset.fit.seed;
  config.cameras = {preset.scene.camera};
  config.weights = preset.weights;
  config.fit = preset.fit;
  config.surface = {"albedo.pfm", "normal.pfm", "depth.pfm"};

  int pano_index = 0;
  for (const Observation& o : gen.observations) {
    ObservationEntry e;
    if (o.kind == ObservationKind::kPanorama) {
      e.kind = "panorama";
      e.image = "pano_" + std::to_string(pano_index++) + ".png";
      e.position = o.position;
      write_png((dir / e.image).string(), o.image);
    } else {
      e.kind = "perspective";
      e.image = "view.png";
      e.depth = "view_depth.pfm";
      e.camera = 0;
      write_png((dir / e.image).string(), o.image);
      write_pfm((dir / e.depth).string(), o.depth);
    }
    config.observations.push_back(std::move(e));
  }

  write_pfm((dir / "albedo.pfm").string(), gen.surf.albedo);
  write_pfm((dir / "normal.pfm").string(), gen.surf.normal);
  write_pfm((dir / "depth.pfm").string(), gen.surf.depth);
  write_pfm((dir / "mask.pfm").string(), gen.albedo_mask);

  ObservationEntry albedo_gt{"albedo", "albedo.pfm", "", "mask.pfm", {}, false, {}, 0};
  ObservationEntry normal_gt{"normal", "normal.pfm", "", "", {}, false, {}, 0};
  ObservationEntry depth_gt{"depth", "depth.pfm", "", "", {}, false, {}, 0};
  config.observations.push_back(albedo_gt);
  config.observations.push_back(normal_gt);
  config.observations.push_back(depth_gt);

  save_camera((dir / "camera.json").string(), preset.scene.camera);
  save_scene_config((dir / "scene.json").string(), config);
  std::cout << "wrote " << a.preset << " scene to " << a.out << "\n";
  return 0;
}

int cmd_grad_check(const GradCheckArgs& a) {
  GradCheckReport report = grad_check_full_chain(a.dims, a.probes, uint64_t(a.seed));
  std::cout << report.format();
  if (!report.passed(a.tol)) {
    std::cout << "FAIL: max relative error exceeds " << a.tol << "\n";
    return 2;
  }
  std::cout << "PASS: max relative error within " << a.tol << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  apply_thread_env();

  CLI::App app{"Volumetric spherical-gaussian lighting toolkit"};
  app.require_subcommand(1);

  PanoArgs pano;
  auto* sub_pano = app.add_subcommand("render-pano", "Render an equirectangular panorama");
  sub_pano->add_option("--volume", pano.volume, "VSG1 volume")->required();
  sub_pano->add_option("--pos", pano.pos, "probe position x,y,z")->required();
  sub_pano->add_option("--out", pano.out, "output image (.png, or .pfm with --hdr)");
  sub_pano->add_flag("--hdr", pano.hdr, "write raw HDR radiance instead of soft-clipped LDR");
  sub_pano->add_option("--height", pano.height, "panorama height (width is twice this)");
  sub_pano->add_option("--samples", pano.samples, "ray samples through the volume");

  ViewArgs view;
  auto* sub_view = app.add_subcommand("render-view", "Render an LDR view plus composited depth");
  sub_view->add_option("--volume", view.volume, "VSG1 volume")->required();
  sub_view->add_option("--camera", view.camera, "camera JSON")->required();
  sub_view->add_option("--out-image", view.out_image, "output PNG");
  sub_view->add_option("--out-depth", view.out_depth, "output depth PFM");
  sub_view->add_option("--samples", view.samples, "ray samples through the volume");

  RerenderArgs rr;
  auto* sub_rr = app.add_subcommand("rerender", "Lambertian re-render of observed surfaces");
  sub_rr->add_option("--volume", rr.volume, "VSG1 volume")->required();
  sub_rr->add_option("--surf", rr.surf, "directory with albedo.pfm, normal.pfm, depth.pfm")
      ->required();
  sub_rr->add_option("--camera", rr.camera, "camera JSON")->required();
  sub_rr->add_option("--K", rr.k, "hemisphere rays per pixel");
  sub_rr->add_flag("--share-neighbors", rr.share_neighbors, "share rays across the 8-neighborhood");
  sub_rr->add_option("--image", rr.image, "observed image: also writes the error image E = I - render");
  sub_rr->add_option("--out-render", rr.out_render, "output re-render PNG");
  sub_rr->add_option("--out-error", rr.out_error, "output error PFM (with --image)");
  sub_rr->add_option("--samples", rr.samples, "ray samples through the volume");

  InsertArgs ins;
  auto* sub_ins = app.add_subcommand("insert", "Composite a synthetic sphere into a view");
  sub_ins->add_option("--volume", ins.volume, "VSG1 volume")->required();
  sub_ins->add_option("--image", ins.image, "observed LDR image")->required();
  sub_ins->add_option("--surf", ins.surf, "directory with albedo.pfm, normal.pfm, depth.pfm")
      ->required();
  sub_ins->add_option("--camera", ins.camera, "camera JSON")->required();
  sub_ins->add_option("--sphere", ins.sphere, "cx,cy,cz,r")->required();
  sub_ins->add_option("--material", ins.material, "mirror | diffuse:<albedo>");
  sub_ins->add_option("--out", ins.out, "output PNG");
  sub_ins->add_option("--K", ins.k, "shading rays");
  sub_ins->add_option("--samples", ins.samples, "ray samples through the volume");

  FitArgs fit;
  auto* sub_fit = app.add_subcommand("fit", "Fit a volume to observations");
  sub_fit->add_option("--config", fit.config, "scene JSON")->required();
  sub_fit->add_option("--out", fit.out, "fitted VSG1 path");
  sub_fit->add_option("--csv", fit.csv, "loss history CSV path");
  sub_fit->add_option("--iterations", fit.iterations, "override config iterations");
  sub_fit->add_option("--lr", fit.lr, "override config learning rate");
  sub_fit->add_option("--seed", fit.seed, "override config seed");
  sub_fit->add_option("--pixels-per-step", fit.pixels_per_step, "override subset size");

  GenSceneArgs gen;
  auto* sub_gen = app.add_subcommand("gen-scene", "Write a canonical scene and its observations");
  sub_gen->add_option("--preset", gen.preset, "box-lamp | two-emitters | slab")->required();
  sub_gen->add_option("--out", gen.out, "output directory")->required();

  GradCheckArgs gc;
  auto* sub_gc = app.add_subcommand("grad-check", "Finite-difference check of the full gradient");
  sub_gc->add_option("--probes", gc.probes, "parameters to probe");
  sub_gc->add_option("--seed", gc.seed, "probe RNG seed");
  sub_gc->add_option("--dims", gc.dims, "test volume resolution per axis");
  sub_gc->add_option("--tol", gc.tol, "maximum relative error accepted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (sub_pano->parsed()) return cmd_render_pano(pano);
    if (sub_view->parsed()) return cmd_render_view(view);
    if (sub_rr->parsed()) return cmd_rerender(rr);
    if (sub_ins->parsed()) return cmd_insert(ins);
    if (sub_fit->parsed()) return cmd_fit(fit);
    if (sub_gen->parsed()) return cmd_gen_scene(gen);
    if (sub_gc->parsed()) return cmd_grad_check(gc);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace vsg
