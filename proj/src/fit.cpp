#include "vsglight/fit.h"

#include <cmath>
#include <string>

#include "vsglight/rng.h"

namespace vsg {

void FitOptions::validate() const {
  if (iterations < 0) throw ValidationError("fit: iteration count must be nonnegative");
  if (!(learning_rate > 0.0)) throw ValidationError("fit: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ValidationError("fit: Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ValidationError("fit: epsilon must be positive");
  if (pixels_per_step <= 0) throw ValidationError("fit: pixels per step must be positive");
  if (history_every <= 0) throw ValidationError("fit: history cadence must be positive");
}

namespace {

constexpr double kAlphaLogitClamp = 1e-6;  // keeps the logit finite
constexpr double kMinDepthParam = 1e-3;

bool has_surf(const SurfaceBuffers& s) { return s.albedo.width > 0 && s.albedo.height > 0; }

// Parameter vector layout: volume (kVolumeChannels per voxel, opacity as a
// logit) followed, when the surface is optimized, by albedo, normal, depth.
struct ParamLayout {
  int64_t n_volume = 0;
  int64_t albedo = -1, normal = -1, depth = -1;
  int64_t total = 0;
};

ParamLayout make_layout(const VsgVolume& vol, const SurfaceBuffers& surf, bool with_surf) {
  ParamLayout l;
  l.n_volume = vol.voxel_count() * kVolumeChannels;
  l.total = l.n_volume;
  if (with_surf) {
    l.albedo = l.total;
    l.total += int64_t(surf.albedo.data.size());
    l.normal = l.total;
    l.total += int64_t(surf.normal.data.size());
    l.depth = l.total;
    l.total += int64_t(surf.depth.data.size());
  }
  return l;
}

void pack(const VsgVolume& vol, const SurfaceBuffers& surf, const ParamLayout& l,
          std::vector<double>& theta) {
  theta.resize(size_t(l.total));
  for (int64_t i = 0; i < vol.voxel_count(); ++i) {
    const double* d = &vol.data[i * kVolumeChannels];
    double* p = &theta[i * kVolumeChannels];
    p[kChAlpha] = logit(clamp(d[kChAlpha], kAlphaLogitClamp, 1.0 - kAlphaLogitClamp));
    for (int c = 1; c < kVolumeChannels; ++c) p[c] = d[c];
  }
  if (l.albedo >= 0) {
    std::copy(surf.albedo.data.begin(), surf.albedo.data.end(), theta.begin() + l.albedo);
    std::copy(surf.normal.data.begin(), surf.normal.data.end(), theta.begin() + l.normal);
    std::copy(surf.depth.data.begin(), surf.depth.data.end(), theta.begin() + l.depth);
  }
}

// Feasibility projection: color nonnegative, albedo in [0,1], depth positive,
// normals unit length. Applied to the parameters after every step so the
// decoded state and the parameter vector stay consistent.
void project(std::vector<double>& theta, const ParamLayout& l) {
  for (int64_t i = 0; i * kVolumeChannels < l.n_volume; ++i) {
    double* p = &theta[i * kVolumeChannels];
    for (int c = kChColorR; c <= kChColorB; ++c) p[c] = std::max(p[c], 0.0);
  }
  if (l.albedo < 0) return;
  for (int64_t i = l.albedo; i < l.normal; ++i) theta[i] = clamp(theta[i], 0.0, 1.0);
  for (int64_t i = l.normal; i + 2 < l.depth; i += 3) {
    Vec3 n{theta[i], theta[i + 1], theta[i + 2]};
    double len = length(n);
    if (len > 1e-12) {
      theta[i] = n.x / len;
      theta[i + 1] = n.y / len;
      theta[i + 2] = n.z / len;
    }
  }
  for (int64_t i = l.depth; i < l.total; ++i) theta[i] = std::max(theta[i], kMinDepthParam);
}

void unpack(const std::vector<double>& theta, const ParamLayout& l, VsgVolume& vol,
            SurfaceBuffers& surf) {
  for (int64_t i = 0; i < vol.voxel_count(); ++i) {
    const double* p = &theta[i * kVolumeChannels];
    double* d = &vol.data[i * kVolumeChannels];
    d[kChAlpha] = sigmoid(p[kChAlpha]);
    for (int c = 1; c < kVolumeChannels; ++c) d[c] = p[c];
  }
  if (l.albedo >= 0) {
    std::copy(theta.begin() + l.albedo, theta.begin() + l.normal, surf.albedo.data.begin());
    std::copy(theta.begin() + l.normal, theta.begin() + l.depth, surf.normal.data.begin());
    std::copy(theta.begin() + l.depth, theta.end(), surf.depth.data.begin());
  }
}

void pack_gradient(const GradientTape& tape, const VsgVolume& vol, const ParamLayout& l,
                   std::vector<double>& grad) {
  grad.assign(size_t(l.total), 0.0);
  std::vector<double> gv = tape.raw_volume_grad(vol);
  std::copy(gv.begin(), gv.end(), grad.begin());
  if (l.albedo >= 0) {
    std::copy(tape.d_albedo.data.begin(), tape.d_albedo.data.end(), grad.begin() + l.albedo);
    std::copy(tape.d_normal.data.begin(), tape.d_normal.data.end(), grad.begin() + l.normal);
    std::copy(tape.d_depth.data.begin(), tape.d_depth.data.end(), grad.begin() + l.depth);
  }
}

LossSubsets draw_subsets(const std::vector<Observation>& obs, int pixels_per_step, uint64_t seed,
                         int iteration) {
  Rng rng(seed, "optimizer.subsample", uint64_t(iteration));
  LossSubsets s;
  bool first_view = true;
  for (const Observation& o : obs) {
    if (o.kind == ObservationKind::kPanorama) {
      int64_t n = int64_t(o.image.width) * o.image.height;
      s.panoramas.push_back(n > pixels_per_step ? rng.sample_without_replacement(n, pixels_per_step)
                                                : std::vector<int64_t>{});
    } else if (o.kind == ObservationKind::kPerspective) {
      int64_t n = int64_t(o.image.width) * o.image.height;
      s.views.push_back(n > pixels_per_step ? rng.sample_without_replacement(n, pixels_per_step)
                                            : std::vector<int64_t>{});
      if (first_view) {
        first_view = false;
        s.rerender = n > pixels_per_step ? rng.sample_without_replacement(n, pixels_per_step)
                                         : std::vector<int64_t>{};
      }
    }
  }
  return s;
}

bool wants_rerender(const std::vector<Observation>& obs, const LossWeights& w) {
  if (w.lambda_rerender <= 0.0) return false;
  for (const Observation& o : obs)
    if (o.kind == ObservationKind::kPerspective) return true;
  return false;
}

}  // namespace

FitResult fit_volume(const VsgVolume& initial, const std::vector<Observation>& observations,
                     const LossWeights& weights, const FitOptions& opt) {
  initial.validate();
  weights.validate();
  opt.validate();
  if (observations.empty()) throw ValidationError("fit: at least one observation required");
  for (const Observation& o : observations) o.validate();

  VsgVolume volume = initial;
  SurfaceBuffers surf = opt.surf;
  const bool surf_present = has_surf(surf);
  if (surf_present) surf.validate();
  const bool with_surf_params = opt.optimize_surface && surf_present;

  ParamLayout layout = make_layout(volume, surf, with_surf_params);
  std::vector<double> theta;
  pack(volume, surf, layout, theta);
  project(theta, layout);
  unpack(theta, layout, volume, surf);

  // Quadrature nodes for the re-render term: fixed across the run unless the
  // normals themselves are being optimized.
  HemisphereGrid grid;
  const HemisphereGrid* grid_ptr = nullptr;
  const bool rerender_active = surf_present && wants_rerender(observations, weights);
  if (rerender_active && !with_surf_params) {
    grid = build_hemisphere_grid(surf.normal, opt.render.quad_rays);
    grid_ptr = &grid;
  }

  auto make_problem = [&](const LossSubsets* subsets) {
    LossProblem p;
    p.volume = &volume;
    p.surf = surf_present ? &surf : nullptr;
    p.observations = &observations;
    p.weights = weights;
    p.render = opt.render;
    p.subsets = subsets;
    p.shade_grid = grid_ptr;
    return p;
  };

  FitResult result;
  result.volume = volume;
  result.surf = surf;

  auto record_history = [&](int iteration) {
    LossProblem p = make_problem(nullptr);
    LossTerms terms = loss_forward(p);
    double total = terms.total(weights);
    result.history.push_back({iteration, terms, total});
    if (result.history.size() == 1 || total < result.best_total) {
      result.best_total = total;
      result.best_iteration = iteration;
      result.volume = volume;
      result.surf = surf;
    }
  };
  record_history(0);

  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0), grad;
  double b1t = 1.0, b2t = 1.0;

  for (int it = 0; it < opt.iterations; ++it) {
    LossSubsets subsets = draw_subsets(observations, opt.pixels_per_step, opt.seed, it);
    GradientTape tape = with_surf_params
                            ? GradientTape::for_problem(volume, surf.width(), surf.height())
                            : GradientTape::for_volume(volume);
    if (with_surf_params && rerender_active) {
      grid = build_hemisphere_grid(surf.normal, opt.render.quad_rays);
      grid_ptr = &grid;
    }
    LossProblem p = make_problem(&subsets);
    try {
      loss_backward(p, tape);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (iteration " + std::to_string(it + 1) + ")");
    }
    pack_gradient(tape, volume, layout, grad);

    b1t *= opt.beta1;
    b2t *= opt.beta2;
    for (size_t i = 0; i < theta.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * grad[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
      double mhat = m[i] / (1.0 - b1t);
      double vhat = v[i] / (1.0 - b2t);
      theta[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
    }
    project(theta, layout);
    unpack(theta, layout, volume, surf);

    if ((it + 1) % opt.history_every == 0 || it + 1 == opt.iterations)
      record_history(it + 1);
  }
  return result;
}

}  // namespace vsg
