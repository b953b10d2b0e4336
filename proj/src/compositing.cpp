#include "vsglight/compositing.h"

#include <algorithm>
#include <vector>

namespace vsg {

namespace {

struct Segment {
  bool hit = false;
  double t0 = 0, t1 = 0;
  int entry_axis = -1, exit_axis = -1;
  bool entry_clamped = false;  // origin inside the bounds: entry pinned at 0
};

Segment clip_to_bounds(const VsgVolume& volume, const Ray& ray) {
  Segment s;
  double t0, t1;
  if (!intersect_aabb(volume.bounds, ray.origin, ray.direction, t0, t1, &s.entry_axis,
                      &s.exit_axis))
    return s;
  if (t0 < 0.0) {
    t0 = 0.0;
    s.entry_clamped = true;
  }
  if (t1 <= t0) return s;
  s.hit = true;
  s.t0 = t0;
  s.t1 = t1;
  return s;
}

// Per-sample scratch for the backward pass. Sized for the default sample
// count; longer walks fall back to the heap.
constexpr int kStackSamples = 160;

// Midpoints of the voxel segments a clipped ray crosses, in traversal order.
std::vector<double> voxel_crossing_midpoints(const VsgVolume& volume, const Ray& ray,
                                             const Segment& seg) {
  std::vector<double> ts;
  ts.push_back(seg.t0);
  Vec3 h = volume.voxel_size();
  const int dims[3] = {volume.nx, volume.ny, volume.nz};
  for (int a = 0; a < 3; ++a) {
    if (ray.direction[a] == 0.0) continue;
    for (int i = 1; i < dims[a]; ++i) {
      double plane = volume.bounds.min[a] + i * h[a];
      double t = (plane - ray.origin[a]) / ray.direction[a];
      if (t > seg.t0 && t < seg.t1) ts.push_back(t);
    }
  }
  ts.push_back(seg.t1);
  std::sort(ts.begin(), ts.end());
  std::vector<double> mids;
  mids.reserve(ts.size() - 1);
  for (size_t i = 0; i + 1 < ts.size(); ++i)
    if (ts[i + 1] - ts[i] > 1e-12) mids.push_back(0.5 * (ts[i] + ts[i + 1]));
  return mids;
}

// Invokes body(t) for every sample along the clipped ray, in order, stopping
// when body returns false.
template <typename Body>
void for_each_sample(const VsgVolume& volume, const Ray& ray, const Segment& seg,
                     const CompositeConfig& cfg, Body&& body) {
  if (cfg.sample_per_voxel) {
    for (double t : voxel_crossing_midpoints(volume, ray, seg))
      if (!body(t)) return;
    return;
  }
  double dt = (seg.t1 - seg.t0) / cfg.n_samples;
  for (int k = 0; k < cfg.n_samples; ++k)
    if (!body(seg.t0 + (k + 0.5) * dt)) return;
}

void reject_per_voxel_backward(const CompositeConfig& cfg) {
  if (cfg.sample_per_voxel)
    throw ValidationError("per-voxel sampling is a forward-only oracle mode");
}

}  // namespace

Vec3 composite_radiance(const VsgVolume& volume, const Ray& ray, const CompositeConfig& cfg) {
  Segment seg = clip_to_bounds(volume, ray);
  if (!seg.hit) return {};
  Vec3 v = -ray.direction;
  Vec3 out;
  double transmittance = 1.0;
  for_each_sample(volume, ray, seg, cfg, [&](double t) {
    VoxelRecord rec = sample_grid(volume, ray.origin + ray.direction * t, cfg.mode);
    if (rec.alpha != 0.0) {
      out += (transmittance * rec.alpha) * sg_eval(v, rec.sg);
      transmittance *= 1.0 - rec.alpha;
    }
    return transmittance != 0.0;
  });
  return out;
}

double composite_depth(const VsgVolume& volume, const Ray& ray, const CompositeConfig& cfg) {
  Segment seg = clip_to_bounds(volume, ray);
  if (!seg.hit) return 0.0;
  double out = 0.0;
  double transmittance = 1.0;
  for_each_sample(volume, ray, seg, cfg, [&](double t) {
    VoxelRecord rec = sample_grid(volume, ray.origin + ray.direction * t, cfg.mode);
    if (rec.alpha != 0.0) {
      out += transmittance * rec.alpha * t;
      transmittance *= 1.0 - rec.alpha;
    }
    return transmittance != 0.0;
  });
  return out + transmittance * seg.t1;
}

Vec3 composite_rgba(const VsgVolume& volume, const Ray& ray, const CompositeConfig& cfg) {
  Segment seg = clip_to_bounds(volume, ray);
  if (!seg.hit) return {};
  Vec3 out;
  double transmittance = 1.0;
  for_each_sample(volume, ray, seg, cfg, [&](double t) {
    VoxelRecord rec = sample_grid(volume, ray.origin + ray.direction * t, cfg.mode);
    if (rec.alpha != 0.0) {
      out += (transmittance * rec.alpha) * rec.sg.color;
      transmittance *= 1.0 - rec.alpha;
    }
    return transmittance != 0.0;
  });
  return out;
}

void composite_radiance_backward(const VsgVolume& volume, const Ray& ray,
                                 const CompositeConfig& cfg, const Vec3& d_out,
                                 GradientTape& tape, Vec3* d_origin) {
  reject_per_voxel_backward(cfg);
  Segment seg = clip_to_bounds(volume, ray);
  if (!seg.hit) return;
  const int n = cfg.n_samples;
  double dt = (seg.t1 - seg.t0) / n;
  Vec3 v = -ray.direction;
  const bool want_origin = d_origin != nullptr && cfg.mode == SampleMode::kTrilinear;

  double alpha_stack[kStackSamples];
  Vec3 g_stack[kStackSamples], tail_stack[kStackSamples];
  std::vector<double> alpha_heap;
  std::vector<Vec3> g_heap, tail_heap;
  double* alpha = alpha_stack;
  Vec3* g = g_stack;
  Vec3* tail = tail_stack;
  if (n > kStackSamples) {
    alpha_heap.resize(n);
    g_heap.resize(n);
    tail_heap.resize(n);
    alpha = alpha_heap.data();
    g = g_heap.data();
    tail = tail_heap.data();
  }

  // First walk: per-sample opacity and lobe radiance over the full span (an
  // opaque sample's own gradient still depends on what lies behind it).
  for (int k = 0; k < n; ++k) {
    double t = seg.t0 + (k + 0.5) * dt;
    VoxelRecord rec = sample_grid(volume, ray.origin + ray.direction * t, cfg.mode);
    alpha[k] = rec.alpha;
    g[k] = sg_eval(v, rec.sg);
  }
  // tail[k] = composite of samples k+1..n-1 as seen from just after sample k.
  Vec3 acc;
  for (int k = n - 1; k >= 0; --k) {
    tail[k] = acc;
    acc = alpha[k] * g[k] + (1.0 - alpha[k]) * acc;
  }

  // Second walk: distribute gradients front to back.
  // d(out)/d(alpha_k) = T_k (g_k - tail_k), d(out)/d(g_k) = T_k alpha_k.
  double transmittance = 1.0;
  for (int k = 0; k < n; ++k) {
    if (transmittance == 0.0) break;  // strictly behind an opaque sample
    double t = seg.t0 + (k + 0.5) * dt;
    Vec3 p = ray.origin + ray.direction * t;
    GridStencil st = grid_stencil(volume, p, cfg.mode, want_origin);
    if (!st.inside) continue;
    double raw[kVolumeChannels];
    sample_raw(volume, st, raw);
    SphericalGaussian sg{{raw[kChColorR], raw[kChColorG], raw[kChColorB]},
                         {raw[kChAxisX], raw[kChAxisY], raw[kChAxisZ]},
                         sigma_from_raw(raw[kChSigmaRaw])};

    double d_alpha = transmittance * dot(d_out, g[k] - tail[k]);
    Vec3 d_g = d_out * (transmittance * alpha[k]);

    SgEvalGrad sgrad = sg_eval_grad(v, sg);
    double color_pull = dot(d_g, sg.color);  // sum_ch d_g_ch * color_ch
    double d_raw[kVolumeChannels];
    d_raw[kChAlpha] = d_alpha;
    d_raw[kChColorR] = d_g.x * sgrad.d_color_factor;
    d_raw[kChColorG] = d_g.y * sgrad.d_color_factor;
    d_raw[kChColorB] = d_g.z * sgrad.d_color_factor;
    d_raw[kChAxisX] = color_pull * sgrad.d_axis_raw.x;
    d_raw[kChAxisY] = color_pull * sgrad.d_axis_raw.y;
    d_raw[kChAxisZ] = color_pull * sgrad.d_axis_raw.z;
    d_raw[kChSigmaRaw] =
        color_pull * sgrad.d_sigma * sigma_from_raw_derivative(raw[kChSigmaRaw]);

    for (int i = 0; i < st.count; ++i) {
      double* dst = &tape.d_volume[st.idx[i] * kVolumeChannels];
      for (int c = 0; c < kVolumeChannels; ++c) dst[c] += st.w[i] * d_raw[c];
    }

    if (want_origin) {
      // d(out)/d(sample position), through every interpolated channel.
      Vec3 d_pos;
      for (int i = 0; i < st.count; ++i) {
        const double* src = &volume.data[st.idx[i] * kVolumeChannels];
        double pull = 0.0;
        for (int c = 0; c < kVolumeChannels; ++c) pull += d_raw[c] * src[c];
        d_pos += st.dw[i] * pull;
      }
      // x_k = origin + t_k * dir with t_k = (1 - s) t0 + s t1, s = (k+1/2)/n;
      // entry/exit parameters slide with the origin along their face axes.
      double s = (k + 0.5) / n;
      double dt_do_coeff[3] = {0, 0, 0};  // gradient of t_k w.r.t. origin
      if (!seg.entry_clamped && seg.entry_axis >= 0)
        dt_do_coeff[seg.entry_axis] += (1.0 - s) * (-1.0 / ray.direction[seg.entry_axis]);
      if (seg.exit_axis >= 0)
        dt_do_coeff[seg.exit_axis] += s * (-1.0 / ray.direction[seg.exit_axis]);
      Vec3 dt_do{dt_do_coeff[0], dt_do_coeff[1], dt_do_coeff[2]};
      *d_origin += d_pos + dt_do * dot(d_pos, ray.direction);
    }

    transmittance *= 1.0 - alpha[k];
  }
}

void composite_depth_backward(const VsgVolume& volume, const Ray& ray,
                              const CompositeConfig& cfg, double d_out, GradientTape& tape) {
  reject_per_voxel_backward(cfg);
  Segment seg = clip_to_bounds(volume, ray);
  if (!seg.hit) return;
  const int n = cfg.n_samples;
  double dt = (seg.t1 - seg.t0) / n;

  double alpha_stack[kStackSamples], tail_stack[kStackSamples];
  std::vector<double> alpha_heap, tail_heap;
  double* alpha = alpha_stack;
  double* tail = tail_stack;
  if (n > kStackSamples) {
    alpha_heap.resize(n);
    tail_heap.resize(n);
    alpha = alpha_heap.data();
    tail = tail_heap.data();
  }

  for (int k = 0; k < n; ++k) {
    double t = seg.t0 + (k + 0.5) * dt;
    alpha[k] = sample_grid(volume, ray.origin + ray.direction * t, cfg.mode).alpha;
  }
  // Terminal value: residual transmittance contributes the exit distance.
  double acc = seg.t1;
  for (int k = n - 1; k >= 0; --k) {
    double t = seg.t0 + (k + 0.5) * dt;
    tail[k] = acc;
    acc = alpha[k] * t + (1.0 - alpha[k]) * acc;
  }

  double transmittance = 1.0;
  for (int k = 0; k < n; ++k) {
    if (transmittance == 0.0) break;
    double t = seg.t0 + (k + 0.5) * dt;
    GridStencil st = grid_stencil(volume, ray.origin + ray.direction * t, cfg.mode);
    if (!st.inside) continue;
    double d_alpha = d_out * transmittance * (t - tail[k]);
    for (int i = 0; i < st.count; ++i)
      tape.d_volume[st.idx[i] * kVolumeChannels + kChAlpha] += st.w[i] * d_alpha;
    transmittance *= 1.0 - alpha[k];
  }
}

}  // namespace vsg
