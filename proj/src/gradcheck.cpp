#include "vsglight/gradcheck.h"

#include <cmath>
#include <sstream>

#include "vsglight/quadrature.h"
#include "vsglight/rng.h"
#include "vsglight/tape.h"

namespace vsg {

std::string GradCheckReport::format() const {
  std::ostringstream out;
  out << "probes: " << probes << "\n";
  out << "max relative error: " << max_rel_error << "\n";
  if (worst_param >= 0) {
    out << "worst parameter: " << (worst_label.empty() ? std::to_string(worst_param) : worst_label)
        << " (analytic " << worst_analytic << ", numeric " << worst_numeric << ")\n";
  }
  return out.str();
}

GradCheckReport grad_check(const std::function<double(const std::vector<double>&)>& f,
                           const std::vector<double>& theta, const std::vector<double>& analytic,
                           int n_probes, uint64_t seed,
                           const std::function<std::string(int64_t)>& label) {
  if (n_probes < 1) throw ValidationError("grad_check needs at least one probe");
  if (theta.size() != analytic.size())
    throw ValidationError("grad_check: parameter and gradient sizes disagree");
  if (theta.empty()) throw ValidationError("grad_check: empty parameter vector");

  Rng rng(seed, "gradcheck.probes");
  std::vector<int64_t> probes =
      rng.sample_without_replacement(int64_t(theta.size()), n_probes);

  GradCheckReport report;
  report.probes = int(probes.size());
  std::vector<double> work = theta;
  for (int64_t i : probes) {
    const double h = 1e-4 * std::max(1.0, std::abs(theta[size_t(i)]));
    work[size_t(i)] = theta[size_t(i)] + h;
    const double f_plus = f(work);
    work[size_t(i)] = theta[size_t(i)] - h;
    const double f_minus = f(work);
    work[size_t(i)] = theta[size_t(i)];

    const double numeric = (f_plus - f_minus) / (2.0 * h);
    const double a = analytic[size_t(i)];
    const double rel =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_param = i;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
      if (label) report.worst_label = label(i);
    }
  }
  return report;
}

namespace {

const char* kChannelNames[kVolumeChannels] = {"alpha",  "color_r", "color_g", "color_b",
                                              "axis_x", "axis_y",  "axis_z",  "sigma_raw"};

// Raw fitting parameters of the volume: opacity as a logit, the rest as
// stored. Lobe axes in the generated volume keep a positive x component, so
// interpolated axes stay far from the isotropic threshold under probing.
std::vector<double> volume_raw_params(const VsgVolume& vol) {
  std::vector<double> theta(size_t(vol.voxel_count()) * kVolumeChannels);
  for (int64_t i = 0; i < vol.voxel_count(); ++i) {
    const double* d = &vol.data[i * kVolumeChannels];
    double* p = &theta[size_t(i) * kVolumeChannels];
    p[kChAlpha] = logit(d[kChAlpha]);
    for (int c = 1; c < kVolumeChannels; ++c) p[c] = d[c];
  }
  return theta;
}

void apply_raw_params(const std::vector<double>& theta, VsgVolume& vol) {
  for (int64_t i = 0; i < vol.voxel_count(); ++i) {
    const double* p = &theta[size_t(i) * kVolumeChannels];
    double* d = &vol.data[i * kVolumeChannels];
    d[kChAlpha] = sigmoid(p[kChAlpha]);
    for (int c = 1; c < kVolumeChannels; ++c) d[c] = p[c];
  }
}

}  // namespace

GradCheckReport grad_check_full_chain(int dims, int n_probes, uint64_t seed) {
  if (dims < 2) throw ValidationError("grad_check_full_chain needs dims >= 2");

  const AABB bounds{{-1, -1, -1}, {1, 1, 1}};
  VsgVolume volume = VsgVolume::zeros(dims, dims, dims, bounds);
  {
    Rng rng(seed, "gradcheck.volume");
    for (int z = 0; z < dims; ++z)
      for (int y = 0; y < dims; ++y)
        for (int x = 0; x < dims; ++x) {
          double alpha = rng.uniform(0.1, 0.6);
          Vec3 color{rng.uniform(0.1, 1.2), rng.uniform(0.1, 1.2), rng.uniform(0.1, 1.2)};
          Vec3 axis{rng.uniform(0.4, 1.0), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
          double sigma_raw = raw_from_sigma(rng.uniform(0.6, 1.8));
          volume.set_record(x, y, z, alpha, color, axis, sigma_raw);
        }
  }

  Camera camera;
  camera.width = 12;
  camera.height = 9;
  camera.fx = camera.fy = 14.0;
  camera.cx = 6.0;
  camera.cy = 4.5;
  camera.position = {0.0, 0.0, -0.9};

  SurfaceBuffers surf;
  surf.albedo = Image::zeros(camera.width, camera.height, 3);
  surf.normal = Image::zeros(camera.width, camera.height, 3);
  surf.depth = Image::zeros(camera.width, camera.height, 1);
  for (int y = 0; y < camera.height; ++y)
    for (int x = 0; x < camera.width; ++x) {
      const double u = x / (camera.width - 1.0), v = y / (camera.height - 1.0);
      surf.albedo.set_rgb(x, y, {0.35 + 0.05 * u + 0.03 * v, 0.45 - 0.04 * u + 0.02 * v,
                                 0.40 + 0.02 * u - 0.03 * v});
      surf.normal.set_rgb(x, y, normalized({-0.3 + 0.6 * u, -0.3 + 0.6 * v, -1.0}));
      surf.depth.at(x, y) = 1.0 + 0.25 * u + 0.15 * v;
    }

  LossWeights weights;  // defaults: every term active
  RenderSettings render;
  render.composite.n_samples = 16;
  render.quad_rays = 32;

  // The quadrature nodes are cached and held fixed; probing never moves them.
  HemisphereGrid grid = build_hemisphere_grid(surf.normal, render.quad_rays);

  // Observations are renders of the volume itself plus small noise. Keeping
  // the total loss small keeps the finite-difference roundoff (~eps*|f|/h,
  // measured against the 1e-8 gradient floor) well under the tolerance.
  Rng orng(seed, "gradcheck.observations");
  std::vector<Observation> observations;
  {
    Observation pano;
    pano.kind = ObservationKind::kPanorama;
    pano.position = {0.2, -0.1, 0.15};
    PanoramaConfig pc;
    pc.width = 16;
    pc.height = 8;
    pc.composite = render.composite;
    pano.image = render_panorama(volume, pano.position, pc);
    for (double& v : pano.image.data) v = clamp(v + orng.uniform(-0.02, 0.02), 0.0, 1.0);
    observations.push_back(std::move(pano));

    // One image serves both the direct composite and the Lambertian re-render;
    // anchoring it between the two predictions keeps both residuals small.
    PerspectiveConfig vc;
    vc.composite = render.composite;
    PerspectiveRender direct = render_perspective_from_volume(volume, camera, vc);
    ShadeConfig sc;
    sc.quad_rays = render.quad_rays;
    sc.composite = render.composite;
    ShadeResult shaded = shade_lambertian(surf, camera, volume, sc);

    Observation view;
    view.kind = ObservationKind::kPerspective;
    view.camera = camera;
    view.image = Image::zeros(camera.width, camera.height, 3);
    for (size_t i = 0; i < view.image.data.size(); ++i)
      view.image.data[i] = clamp(0.5 * (direct.rgb.data[i] + shaded.ldr.data[i]) +
                                     orng.uniform(-0.01, 0.01),
                                 0.0, 1.0);
    view.depth = direct.depth;
    for (double& v : view.depth.data) v *= 1.0 + orng.uniform(-0.02, 0.02);
    observations.push_back(std::move(view));

    Observation albedo_gt;
    albedo_gt.kind = ObservationKind::kAlbedoGt;
    albedo_gt.camera = camera;
    albedo_gt.image = surf.albedo;
    for (double& v : albedo_gt.image.data) v = clamp(v + orng.uniform(-0.005, 0.005), 0.0, 1.0);
    albedo_gt.mask = Image::zeros(camera.width, camera.height, 1);
    for (double& v : albedo_gt.mask.data) v = orng.uniform() < 0.7 ? 1.0 : 0.0;
    observations.push_back(std::move(albedo_gt));

    Observation normal_gt;
    normal_gt.kind = ObservationKind::kNormalGt;
    normal_gt.camera = camera;
    normal_gt.image = surf.normal;
    for (int y = 0; y < camera.height; ++y)
      for (int x = 0; x < camera.width; ++x) {
        Vec3 n = normal_gt.image.rgb(x, y) + Vec3{orng.uniform(-0.005, 0.005),
                                                  orng.uniform(-0.005, 0.005),
                                                  orng.uniform(-0.005, 0.005)};
        normal_gt.image.set_rgb(x, y, normalized(n));
      }
    observations.push_back(std::move(normal_gt));

    Observation depth_gt;
    depth_gt.kind = ObservationKind::kDepthGt;
    depth_gt.camera = camera;
    depth_gt.image = surf.depth;
    for (double& v : depth_gt.image.data) v *= 1.0 + orng.uniform(-0.005, 0.005);
    observations.push_back(std::move(depth_gt));
  }

  LossProblem problem;
  problem.surf = &surf;
  problem.observations = &observations;
  problem.weights = weights;
  problem.render = render;
  problem.shade_grid = &grid;

  VsgVolume scratch = volume;
  problem.volume = &scratch;
  auto f = [&](const std::vector<double>& theta) {
    apply_raw_params(theta, scratch);
    return loss_forward(problem).total(weights);
  };

  problem.volume = &volume;
  GradientTape tape = GradientTape::for_problem(volume, camera.width, camera.height);
  loss_backward(problem, tape);
  std::vector<double> analytic = tape.raw_volume_grad(volume);
  std::vector<double> theta = volume_raw_params(volume);
  problem.volume = &scratch;

  auto label = [&](int64_t i) {
    int64_t voxel = i / kVolumeChannels;
    int ch = int(i % kVolumeChannels);
    int x = int(voxel % volume.nx);
    int y = int((voxel / volume.nx) % volume.ny);
    int z = int(voxel / (int64_t(volume.nx) * volume.ny));
    std::ostringstream s;
    s << "voxel (" << x << ", " << y << ", " << z << ") " << kChannelNames[ch];
    return s.str();
  };
  return grad_check(f, theta, analytic, n_probes, seed, label);
}

}  // namespace vsg
