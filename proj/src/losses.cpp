#include "vsglight/losses.h"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "vsglight/parallel.h"

namespace vsg {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw ValidationError(std::string(what) + ": shape mismatch");
}

// Pixel indices a subset pointer denotes: the subset itself, or all pixels.
std::vector<int64_t> resolve_pixels(int64_t count, const std::vector<int64_t>* subset) {
  if (subset && !subset->empty()) {
    for (int64_t p : *subset)
      if (p < 0 || p >= count) throw ValidationError("pixel subset index out of range");
    return *subset;
  }
  std::vector<int64_t> all(count);
  std::iota(all.begin(), all.end(), int64_t(0));
  return all;
}

// Deterministic parallel reduction: per-pixel values land in a buffer that is
// summed serially, so the result does not depend on the thread count.
template <typename F>
double sum_over_pixels(const std::vector<int64_t>& pixels, F&& per_pixel) {
  std::vector<double> vals(pixels.size());
  parallel_for(int64_t(pixels.size()), [&](int64_t i) { vals[i] = per_pixel(pixels[i]); });
  double s = 0.0;
  for (double v : vals) s += v;
  return s;
}

}  // namespace

void LossWeights::validate() const {
  const double all[] = {lambda_albedo, lambda_normal, lambda_depth,    lambda_light, lambda_visible,
                        lambda_reg,    lambda_rerender, lambda_local,  lambda_si};
  for (double w : all)
    if (!(w >= 0.0)) throw ValidationError("loss weights must be nonnegative");
}

void Observation::validate() const {
  switch (kind) {
    case ObservationKind::kPanorama:
      if (image.channels != 3) throw ValidationError("panorama observation needs an rgb image");
      if (image.width != 2 * image.height)
        throw ValidationError("panorama observation width must be twice its height");
      if (orientation.orthonormality_error() > 1e-9)
        throw ValidationError("panorama orientation must be orthonormal");
      break;
    case ObservationKind::kPerspective:
      camera.validate();
      if (image.channels != 3 || image.width != camera.width || image.height != camera.height)
        throw ValidationError("perspective observation image disagrees with its camera");
      if (depth.channels != 1 || depth.width != camera.width || depth.height != camera.height)
        throw ValidationError("perspective observation depth disagrees with its camera");
      break;
    case ObservationKind::kAlbedoGt:
      if (image.channels != 3) throw ValidationError("albedo target needs 3 channels");
      if (mask.channels != 1 || mask.width != image.width || mask.height != image.height)
        throw ValidationError("albedo target needs a matching 1-channel mask");
      break;
    case ObservationKind::kNormalGt:
      if (image.channels != 3) throw ValidationError("normal target needs 3 channels");
      break;
    case ObservationKind::kDepthGt:
      if (image.channels != 1) throw ValidationError("depth target needs 1 channel");
      break;
  }
}

// ---------------------------------------------------------------------------
// Albedo
// ---------------------------------------------------------------------------

double loss_albedo(const Image& pred, const Image& gt, const Image& mask, double lambda_local) {
  require_same_shape(pred, gt, "albedo loss");
  if (mask.width != pred.width || mask.height != pred.height || mask.channels != 1)
    throw ValidationError("albedo loss: mask must be 1-channel at the prediction resolution");
  const int w = pred.width, h = pred.height, ch = pred.channels;
  const double norm = double(w) * h * ch;

  double mse = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    double d = pred.data[i] - gt.data[i];
    mse += d * d;
  }

  double tv = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) == 0.0) continue;
      if (x + 1 < w && mask.at(x + 1, y) != 0.0)
        for (int c = 0; c < ch; ++c) tv += std::abs(pred.at(x + 1, y, c) - pred.at(x, y, c));
      if (y + 1 < h && mask.at(x, y + 1) != 0.0)
        for (int c = 0; c < ch; ++c) tv += std::abs(pred.at(x, y + 1, c) - pred.at(x, y, c));
    }
  return mse / norm + lambda_local * tv / norm;
}

void loss_albedo_backward(const Image& pred, const Image& gt, const Image& mask,
                          double lambda_local, double scale, Image& d_pred) {
  require_same_shape(pred, gt, "albedo loss");
  require_same_shape(pred, d_pred, "albedo loss gradient");
  const int w = pred.width, h = pred.height, ch = pred.channels;
  const double norm = double(w) * h * ch;

  for (size_t i = 0; i < pred.data.size(); ++i)
    d_pred.data[i] += scale * 2.0 * (pred.data[i] - gt.data[i]) / norm;

  const double tvw = scale * lambda_local / norm;
  auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) == 0.0) continue;
      if (x + 1 < w && mask.at(x + 1, y) != 0.0)
        for (int c = 0; c < ch; ++c) {
          double s = sign(pred.at(x + 1, y, c) - pred.at(x, y, c)) * tvw;
          d_pred.at(x + 1, y, c) += s;
          d_pred.at(x, y, c) -= s;
        }
      if (y + 1 < h && mask.at(x, y + 1) != 0.0)
        for (int c = 0; c < ch; ++c) {
          double s = sign(pred.at(x, y + 1, c) - pred.at(x, y, c)) * tvw;
          d_pred.at(x, y + 1, c) += s;
          d_pred.at(x, y, c) -= s;
        }
    }
}

// ---------------------------------------------------------------------------
// Normal
// ---------------------------------------------------------------------------

double loss_normal(const Image& pred, const Image& gt) {
  require_same_shape(pred, gt, "normal loss");
  if (pred.channels != 3) throw ValidationError("normal loss needs 3-channel buffers");
  const int64_t n = int64_t(pred.width) * pred.height;
  double sum = 0.0;
  for (int64_t p = 0; p < n; ++p) {
    int x = int(p % pred.width), y = int(p / pred.width);
    Vec3 v = pred.rgb(x, y);
    double len = length(v);
    if (len == 0.0) throw NumericError("normal loss: zero prediction vector");
    sum += std::acos(clamp(dot(gt.rgb(x, y), v / len), -1.0, 1.0));
  }
  return sum / double(n);
}

void loss_normal_backward(const Image& pred, const Image& gt, double scale, Image& d_pred) {
  require_same_shape(pred, gt, "normal loss");
  require_same_shape(pred, d_pred, "normal loss gradient");
  const int64_t n = int64_t(pred.width) * pred.height;
  for (int64_t p = 0; p < n; ++p) {
    int x = int(p % pred.width), y = int(p / pred.width);
    Vec3 v = pred.rgb(x, y);
    double len = length(v);
    if (len == 0.0) throw NumericError("normal loss: zero prediction vector");
    Vec3 u = v / len;
    Vec3 g = gt.rgb(x, y);
    double cosv = dot(g, u);
    if (cosv >= 1.0 || cosv <= -1.0) continue;  // clamped: flat
    // d acos(c)/d pred = -1/sqrt(1-c^2) * (g - u (u.g)) / |pred|
    Vec3 dv = (g - u * cosv) * (-1.0 / (std::sqrt(1.0 - cosv * cosv) * len));
    dv = dv * (scale / double(n));
    d_pred.at(x, y, 0) += dv.x;
    d_pred.at(x, y, 1) += dv.y;
    d_pred.at(x, y, 2) += dv.z;
  }
}

// ---------------------------------------------------------------------------
// Depth
// ---------------------------------------------------------------------------

double depth_si_scale(const Image& pred, const Image& gt) {
  require_same_shape(pred, gt, "depth loss");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    num += pred.data[i] * gt.data[i];
    den += pred.data[i] * pred.data[i];
  }
  if (den == 0.0) throw NumericError("depth loss: scale undefined for an all-zero prediction");
  return num / den;
}

double loss_depth(const Image& pred, const Image& gt, double lambda_si, double* c_out) {
  require_same_shape(pred, gt, "depth loss");
  if (pred.channels != 1) throw ValidationError("depth loss needs 1-channel buffers");
  if (pred.data.empty()) throw ValidationError("depth loss: empty buffers");
  for (size_t i = 0; i < pred.data.size(); ++i)
    if (pred.data[i] <= 0.0 || gt.data[i] <= 0.0)
      throw ValidationError("depth loss: depths must be positive");
  const double n = double(pred.data.size());
  double c = depth_si_scale(pred, gt);
  if (c_out) *c_out = c;
  double log_term = 0.0, si_term = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    double dl = std::log(gt.data[i] + 1.0) - std::log(pred.data[i] + 1.0);
    log_term += dl * dl;
    double ds = gt.data[i] - c * pred.data[i];
    si_term += ds * ds;
  }
  return log_term / n + lambda_si * si_term / n;
}

void loss_depth_backward(const Image& pred, const Image& gt, double lambda_si, double scale,
                         Image& d_pred) {
  require_same_shape(pred, gt, "depth loss");
  require_same_shape(pred, d_pred, "depth loss gradient");
  const double n = double(pred.data.size());
  double c = depth_si_scale(pred, gt);
  // c sits at the argmin of the si term, so its own derivative contributes
  // nothing (envelope theorem); only the explicit pred dependence remains.
  for (size_t i = 0; i < pred.data.size(); ++i) {
    double g = 2.0 * (std::log(pred.data[i] + 1.0) - std::log(gt.data[i] + 1.0)) /
               (pred.data[i] + 1.0) / n;
    g += lambda_si * (-2.0) * c * (gt.data[i] - c * pred.data[i]) / n;
    d_pred.data[i] += scale * g;
  }
}

// ---------------------------------------------------------------------------
// Opacity regularizer
// ---------------------------------------------------------------------------

double loss_reg_alpha(const VsgVolume& volume) {
  const int64_t n = volume.voxel_count();
  double sum = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double a = volume.data[i * kVolumeChannels + kChAlpha];
    sum += -a * std::log(clamp(a, 1e-7, 1.0));
  }
  return sum / double(n);
}

void loss_reg_alpha_backward(const VsgVolume& volume, double scale, GradientTape& tape) {
  const int64_t n = volume.voxel_count();
  const double s = scale / double(n);
  for (int64_t i = 0; i < n; ++i) {
    double a = volume.data[i * kVolumeChannels + kChAlpha];
    double g = a >= 1e-7 ? -(std::log(a) + 1.0) : -std::log(1e-7);
    tape.dv(i, kChAlpha) += s * g;
  }
}

// ---------------------------------------------------------------------------
// Photometric panorama term
// ---------------------------------------------------------------------------

namespace {

Vec3 panorama_pixel(const VsgVolume& volume, const Observation& pano, const RenderSettings& rs,
                    int x, int y) {
  Vec3 dir = panorama_direction(x, y, pano.image.width, pano.image.height, pano.orientation);
  return soft_clip(composite_radiance(volume, Ray(pano.position, dir), rs.composite), rs.tau);
}

}  // namespace

double loss_light_photometric(const VsgVolume& volume, const std::vector<Observation>& panoramas,
                              const RenderSettings& rs,
                              const std::vector<std::vector<int64_t>>* subsets) {
  if (panoramas.empty()) return 0.0;
  if (subsets && subsets->size() != panoramas.size())
    throw ValidationError("photometric loss: one subset list per panorama required");
  double total = 0.0;
  for (size_t j = 0; j < panoramas.size(); ++j) {
    const Observation& pano = panoramas[j];
    pano.validate();
    if (pano.kind != ObservationKind::kPanorama)
      throw ValidationError("photometric loss: every observation must be a panorama");
    std::vector<int64_t> pixels = resolve_pixels(int64_t(pano.image.width) * pano.image.height,
                                                 subsets ? &(*subsets)[j] : nullptr);
    double sum = sum_over_pixels(pixels, [&](int64_t p) {
      int x = int(p % pano.image.width), y = int(p / pano.image.width);
      Vec3 d = panorama_pixel(volume, pano, rs, x, y) - pano.image.rgb(x, y);
      return dot(d, d);
    });
    total += sum / (double(pixels.size()) * 3.0);
  }
  return total / double(panoramas.size());
}

void loss_light_photometric_backward(const VsgVolume& volume,
                                     const std::vector<Observation>& panoramas,
                                     const RenderSettings& rs, double scale, GradientTape& tape,
                                     const std::vector<std::vector<int64_t>>* subsets) {
  if (panoramas.empty()) return;
  if (subsets && subsets->size() != panoramas.size())
    throw ValidationError("photometric loss: one subset list per panorama required");

  const int nthreads = thread_count();
  std::vector<GradientTape> locals(nthreads);
  for (auto& t : locals) {
    t.nx = tape.nx;
    t.ny = tape.ny;
    t.nz = tape.nz;
    t.d_volume.assign(tape.d_volume.size(), 0.0);
  }

  for (size_t j = 0; j < panoramas.size(); ++j) {
    const Observation& pano = panoramas[j];
    std::vector<int64_t> pixels = resolve_pixels(int64_t(pano.image.width) * pano.image.height,
                                                 subsets ? &(*subsets)[j] : nullptr);
    const double w = scale * 2.0 / (double(pixels.size()) * 3.0 * double(panoramas.size()));
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < int64_t(pixels.size()); ++i) {
      int x = int(pixels[i] % pano.image.width), y = int(pixels[i] / pano.image.width);
      Vec3 dir = panorama_direction(x, y, pano.image.width, pano.image.height, pano.orientation);
      Ray ray(pano.position, dir);
      Vec3 radiance = composite_radiance(volume, ray, rs.composite);
      Vec3 clipped = soft_clip(radiance, rs.tau);
      Vec3 diff = clipped - pano.image.rgb(x, y);
      Vec3 d_radiance{w * diff.x * soft_clip_derivative(radiance.x, rs.tau),
                      w * diff.y * soft_clip_derivative(radiance.y, rs.tau),
                      w * diff.z * soft_clip_derivative(radiance.z, rs.tau)};
      composite_radiance_backward(volume, ray, rs.composite, d_radiance,
                                  locals[current_thread()]);
    }
  }

  for (const auto& local : locals)
    for (size_t i = 0; i < tape.d_volume.size(); ++i) tape.d_volume[i] += local.d_volume[i];
}

// ---------------------------------------------------------------------------
// Visible-view term
// ---------------------------------------------------------------------------

double loss_visible(const VsgVolume& volume, const Image& image, const Image& depth,
                    const Camera& camera, const RenderSettings& rs,
                    const std::vector<int64_t>* subset) {
  camera.validate();
  if (image.channels != 3 || image.width != camera.width || image.height != camera.height)
    throw ValidationError("visible loss: image disagrees with the camera");
  if (depth.channels != 1 || depth.width != camera.width || depth.height != camera.height)
    throw ValidationError("visible loss: depth disagrees with the camera");
  std::vector<int64_t> pixels =
      resolve_pixels(int64_t(camera.width) * camera.height, subset);

  double rgb_sum = sum_over_pixels(pixels, [&](int64_t p) {
    int x = int(p % camera.width), y = int(p / camera.width);
    Ray ray = camera.pixel_to_ray(x, y);
    Vec3 d = soft_clip(composite_radiance(volume, ray, rs.composite), rs.tau) - image.rgb(x, y);
    return dot(d, d);
  });
  double depth_sum = sum_over_pixels(pixels, [&](int64_t p) {
    int x = int(p % camera.width), y = int(p / camera.width);
    Ray ray = camera.pixel_to_ray(x, y);
    double d = composite_depth(volume, ray, rs.composite) - depth.at(x, y);
    return d * d;
  });
  return rgb_sum / (double(pixels.size()) * 3.0) + depth_sum / double(pixels.size());
}

void loss_visible_backward(const VsgVolume& volume, const Image& image, const Image& depth,
                           const Camera& camera, const RenderSettings& rs, double scale,
                           GradientTape& tape, const std::vector<int64_t>* subset) {
  std::vector<int64_t> pixels =
      resolve_pixels(int64_t(camera.width) * camera.height, subset);

  const int nthreads = thread_count();
  std::vector<GradientTape> locals(nthreads);
  for (auto& t : locals) {
    t.nx = tape.nx;
    t.ny = tape.ny;
    t.nz = tape.nz;
    t.d_volume.assign(tape.d_volume.size(), 0.0);
  }

  const double wrgb = scale * 2.0 / (double(pixels.size()) * 3.0);
  const double wd = scale * 2.0 / double(pixels.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < int64_t(pixels.size()); ++i) {
    int x = int(pixels[i] % camera.width), y = int(pixels[i] / camera.width);
    Ray ray = camera.pixel_to_ray(x, y);
    GradientTape& local = locals[current_thread()];

    Vec3 radiance = composite_radiance(volume, ray, rs.composite);
    Vec3 diff = soft_clip(radiance, rs.tau) - image.rgb(x, y);
    Vec3 d_radiance{wrgb * diff.x * soft_clip_derivative(radiance.x, rs.tau),
                    wrgb * diff.y * soft_clip_derivative(radiance.y, rs.tau),
                    wrgb * diff.z * soft_clip_derivative(radiance.z, rs.tau)};
    composite_radiance_backward(volume, ray, rs.composite, d_radiance, local);

    double ddiff = composite_depth(volume, ray, rs.composite) - depth.at(x, y);
    composite_depth_backward(volume, ray, rs.composite, wd * ddiff, local);
  }

  for (const auto& local : locals)
    for (size_t i = 0; i < tape.d_volume.size(); ++i) tape.d_volume[i] += local.d_volume[i];
}

// ---------------------------------------------------------------------------
// Re-render term
// ---------------------------------------------------------------------------

double loss_rerender(const SurfaceBuffers& surf, const Camera& camera, const VsgVolume& volume,
                     const Image& image, int k, const RenderSettings& rs,
                     const std::vector<int64_t>* subset, const HemisphereGrid* grid) {
  if (image.channels != 3 || image.width != surf.width() || image.height != surf.height())
    throw ValidationError("re-render loss: image disagrees with the surface buffers");
  if (surf.width() != camera.width || surf.height() != camera.height)
    throw ValidationError("re-render loss: surface buffers disagree with the camera");
  if (k <= 0) throw ValidationError("re-render loss: ray count must be positive");
  if (grid && (grid->width != camera.width || grid->height != camera.height || grid->k != k))
    throw ValidationError("re-render loss: cached quadrature grid disagrees");

  HemisphereGrid local_grid;
  if (!grid) {
    local_grid = build_hemisphere_grid(surf.normal, k);
    grid = &local_grid;
  }
  ShadeConfig cfg;
  cfg.quad_rays = k;
  cfg.share_neighbors = rs.share_neighbors;
  cfg.composite = rs.composite;
  cfg.tau = rs.tau;

  std::vector<int64_t> pixels = resolve_pixels(int64_t(camera.width) * camera.height, subset);
  double sum = sum_over_pixels(pixels, [&](int64_t p) {
    int x = int(p % camera.width), y = int(p / camera.width);
    Vec3 d = shade_lambertian_pixel(surf, camera, volume, cfg, *grid, x, y) - image.rgb(x, y);
    return dot(d, d);
  });
  return sum / (double(pixels.size()) * 3.0);
}

void loss_rerender_backward(const SurfaceBuffers& surf, const Camera& camera,
                            const VsgVolume& volume, const Image& image, int k,
                            const RenderSettings& rs, double scale, GradientTape& tape,
                            const std::vector<int64_t>* subset, const HemisphereGrid* grid) {
  HemisphereGrid local_grid;
  if (!grid) {
    local_grid = build_hemisphere_grid(surf.normal, k);
    grid = &local_grid;
  }
  ShadeConfig cfg;
  cfg.quad_rays = k;
  cfg.share_neighbors = rs.share_neighbors;
  cfg.composite = rs.composite;
  cfg.tau = rs.tau;
  const bool want_surf =
      tape.d_albedo.width == camera.width && tape.d_albedo.height == camera.height;

  std::vector<int64_t> pixels = resolve_pixels(int64_t(camera.width) * camera.height, subset);
  const double w = scale * 2.0 / (double(pixels.size()) * 3.0);

  const int nthreads = thread_count();
  std::vector<GradientTape> locals(nthreads);
  for (auto& t : locals) {
    t.nx = tape.nx;
    t.ny = tape.ny;
    t.nz = tape.nz;
    t.d_volume.assign(tape.d_volume.size(), 0.0);
  }

  // Surface gradients go straight to the shared tape: subset pixels are
  // distinct, so no two iterations touch the same surface entry.
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < int64_t(pixels.size()); ++i) {
    int x = int(pixels[i] % camera.width), y = int(pixels[i] / camera.width);
    Vec3 diff =
        shade_lambertian_pixel(surf, camera, volume, cfg, *grid, x, y) - image.rgb(x, y);
    shade_lambertian_pixel_backward(surf, camera, volume, cfg, *grid, x, y, diff * w,
                                    locals[current_thread()], want_surf ? &tape : nullptr);
  }

  for (const auto& local : locals)
    for (size_t i = 0; i < tape.d_volume.size(); ++i) tape.d_volume[i] += local.d_volume[i];
}

// ---------------------------------------------------------------------------
// Total objective
// ---------------------------------------------------------------------------

double LossTerms::total(const LossWeights& w) const {
  return w.lambda_albedo * albedo + w.lambda_normal * normal + w.lambda_depth * depth +
         w.lambda_light * light + w.lambda_visible * visible + w.lambda_reg * reg +
         w.lambda_rerender * rerender;
}

namespace {

void check_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw NumericError(std::string(term) + " loss is not finite");
}

struct ProblemView {
  std::vector<const Observation*> panoramas;
  std::vector<const Observation*> views;
  const Observation* albedo_gt = nullptr;
  const Observation* normal_gt = nullptr;
  const Observation* depth_gt = nullptr;
};

ProblemView split_observations(const LossProblem& p) {
  if (!p.volume) throw ValidationError("loss evaluation needs a volume");
  if (!p.observations) throw ValidationError("loss evaluation needs observations");
  p.weights.validate();
  ProblemView v;
  for (const Observation& o : *p.observations) {
    o.validate();
    switch (o.kind) {
      case ObservationKind::kPanorama: v.panoramas.push_back(&o); break;
      case ObservationKind::kPerspective: v.views.push_back(&o); break;
      case ObservationKind::kAlbedoGt: v.albedo_gt = &o; break;
      case ObservationKind::kNormalGt: v.normal_gt = &o; break;
      case ObservationKind::kDepthGt: v.depth_gt = &o; break;
    }
  }
  bool needs_surf = (p.weights.lambda_rerender > 0.0 && !v.views.empty()) ||
                    (p.weights.lambda_albedo > 0.0 && v.albedo_gt) ||
                    (p.weights.lambda_normal > 0.0 && v.normal_gt) ||
                    (p.weights.lambda_depth > 0.0 && v.depth_gt);
  if (needs_surf && !p.surf)
    throw ValidationError("loss evaluation needs surface buffers for these observations");
  return v;
}

// Copies of the per-kind subset lists, null when the problem has none.
const std::vector<int64_t>* subset_or_null(const std::vector<std::vector<int64_t>>* lists,
                                           size_t j) {
  if (!lists || j >= lists->size() || (*lists)[j].empty()) return nullptr;
  return &(*lists)[j];
}

}  // namespace

LossTerms loss_forward(const LossProblem& p) {
  ProblemView v = split_observations(p);
  const LossWeights& w = p.weights;
  LossTerms t;

  if (w.lambda_albedo > 0.0 && v.albedo_gt) {
    t.albedo = loss_albedo(p.surf->albedo, v.albedo_gt->image, v.albedo_gt->mask, w.lambda_local);
    check_finite(t.albedo, "albedo");
  }
  if (w.lambda_normal > 0.0 && v.normal_gt) {
    t.normal = loss_normal(p.surf->normal, v.normal_gt->image);
    check_finite(t.normal, "normal");
  }
  if (w.lambda_depth > 0.0 && v.depth_gt) {
    t.depth = loss_depth(p.surf->depth, v.depth_gt->image, w.lambda_si);
    check_finite(t.depth, "depth");
  }
  if (w.lambda_light > 0.0 && !v.panoramas.empty()) {
    std::vector<Observation> panos;
    panos.reserve(v.panoramas.size());
    for (const Observation* o : v.panoramas) panos.push_back(*o);
    t.light = loss_light_photometric(*p.volume, panos, p.render,
                                     p.subsets ? &p.subsets->panoramas : nullptr);
    check_finite(t.light, "photometric");
  }
  if (w.lambda_visible > 0.0 && !v.views.empty()) {
    for (size_t j = 0; j < v.views.size(); ++j) {
      const Observation* o = v.views[j];
      t.visible += loss_visible(*p.volume, o->image, o->depth, o->camera, p.render,
                                subset_or_null(p.subsets ? &p.subsets->views : nullptr, j));
    }
    t.visible /= double(v.views.size());
    check_finite(t.visible, "visible");
  }
  if (w.lambda_reg > 0.0) {
    t.reg = loss_reg_alpha(*p.volume);
    check_finite(t.reg, "opacity regularizer");
  }
  if (w.lambda_rerender > 0.0 && !v.views.empty() && p.surf) {
    const Observation* o = v.views.front();
    const std::vector<int64_t>* sub =
        (p.subsets && !p.subsets->rerender.empty()) ? &p.subsets->rerender : nullptr;
    t.rerender = loss_rerender(*p.surf, o->camera, *p.volume, o->image, p.render.quad_rays,
                               p.render, sub, p.shade_grid);
    check_finite(t.rerender, "re-render");
  }
  return t;
}

LossTerms loss_backward(const LossProblem& p, GradientTape& tape) {
  ProblemView v = split_observations(p);
  const LossWeights& w = p.weights;
  LossTerms t;
  const bool want_surf = p.surf && tape.d_albedo.width == p.surf->width() &&
                         tape.d_albedo.height == p.surf->height();

  if (w.lambda_albedo > 0.0 && v.albedo_gt) {
    t.albedo = loss_albedo(p.surf->albedo, v.albedo_gt->image, v.albedo_gt->mask, w.lambda_local);
    check_finite(t.albedo, "albedo");
    if (want_surf)
      loss_albedo_backward(p.surf->albedo, v.albedo_gt->image, v.albedo_gt->mask, w.lambda_local,
                           w.lambda_albedo, tape.d_albedo);
  }
  if (w.lambda_normal > 0.0 && v.normal_gt) {
    t.normal = loss_normal(p.surf->normal, v.normal_gt->image);
    check_finite(t.normal, "normal");
    if (want_surf)
      loss_normal_backward(p.surf->normal, v.normal_gt->image, w.lambda_normal, tape.d_normal);
  }
  if (w.lambda_depth > 0.0 && v.depth_gt) {
    t.depth = loss_depth(p.surf->depth, v.depth_gt->image, w.lambda_si);
    check_finite(t.depth, "depth");
    if (want_surf)
      loss_depth_backward(p.surf->depth, v.depth_gt->image, w.lambda_si, w.lambda_depth,
                          tape.d_depth);
  }
  if (w.lambda_light > 0.0 && !v.panoramas.empty()) {
    std::vector<Observation> panos;
    panos.reserve(v.panoramas.size());
    for (const Observation* o : v.panoramas) panos.push_back(*o);
    const auto* subs = p.subsets ? &p.subsets->panoramas : nullptr;
    t.light = loss_light_photometric(*p.volume, panos, p.render, subs);
    check_finite(t.light, "photometric");
    loss_light_photometric_backward(*p.volume, panos, p.render, w.lambda_light, tape, subs);
  }
  if (w.lambda_visible > 0.0 && !v.views.empty()) {
    for (size_t j = 0; j < v.views.size(); ++j) {
      const Observation* o = v.views[j];
      const auto* sub = subset_or_null(p.subsets ? &p.subsets->views : nullptr, j);
      t.visible += loss_visible(*p.volume, o->image, o->depth, o->camera, p.render, sub);
      loss_visible_backward(*p.volume, o->image, o->depth, o->camera, p.render,
                            w.lambda_visible / double(v.views.size()), tape, sub);
    }
    t.visible /= double(v.views.size());
    check_finite(t.visible, "visible");
  }
  if (w.lambda_reg > 0.0) {
    t.reg = loss_reg_alpha(*p.volume);
    check_finite(t.reg, "opacity regularizer");
    loss_reg_alpha_backward(*p.volume, w.lambda_reg, tape);
  }
  if (w.lambda_rerender > 0.0 && !v.views.empty() && p.surf) {
    const Observation* o = v.views.front();
    const std::vector<int64_t>* sub =
        (p.subsets && !p.subsets->rerender.empty()) ? &p.subsets->rerender : nullptr;
    t.rerender = loss_rerender(*p.surf, o->camera, *p.volume, o->image, p.render.quad_rays,
                               p.render, sub, p.shade_grid);
    check_finite(t.rerender, "re-render");
    loss_rerender_backward(*p.surf, o->camera, *p.volume, o->image, p.render.quad_rays, p.render,
                           w.lambda_rerender, tape, sub, p.shade_grid);
  }
  return t;
}

}  // namespace vsg
