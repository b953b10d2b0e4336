// Timing for the two kernel families that dominate fitting, each measured
// against the serial reference path the tests validate them with:
//
//   * ray compositing: production sampler (nearest per-voxel, trilinear)
//     vs the serial voxel walk oracle
//   * photometric gradient: the OpenMP pixel loop at one thread vs all
//     hardware threads
//
// Run with no arguments; VSGLIGHT_THREADS caps the thread sweep.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "vsglight/compositing.h"
#include "vsglight/losses.h"
#include "vsglight/parallel.h"
#include "vsglight/rng.h"
#include "vsglight/scene.h"
#include "vsglight/shading.h"
#include "vsglight/tape.h"

namespace {

using namespace vsg;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// Best-of-reps wall time for one workload invocation.
template <class F>
double time_best(int reps, const F& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    double t0 = now_seconds();
    f();
    double t = now_seconds() - t0;
    if (t < best) best = t;
  }
  return best;
}

std::vector<Ray> make_rays(const VsgVolume& vol, int count) {
  Rng rng(0, "bench.rays");
  std::vector<Ray> rays;
  rays.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec3 o{rng.uniform(vol.bounds.min.x * 0.6, vol.bounds.max.x * 0.6),
           rng.uniform(vol.bounds.min.y * 0.6, vol.bounds.max.y * 0.6),
           rng.uniform(vol.bounds.min.z * 0.6, vol.bounds.max.z * 0.6)};
    rays.push_back(Ray(o, rng.unit_vector()));
  }
  return rays;
}

void bench_compositing(const VsgVolume& vol) {
  const int n_rays = 20000;
  std::vector<Ray> rays = make_rays(vol, n_rays);

  CompositeConfig exact;
  exact.mode = SampleMode::kNearest;
  exact.sample_per_voxel = true;

  CompositeConfig render;  // trilinear, 128 samples: the render path

  double sum = 0.0;
  double t_ref = time_best(3, [&] {
    sum = 0.0;
    for (const Ray& r : rays) sum += reference_radiance(vol, r).x;
  });
  double sum_exact = 0.0;
  double t_exact = time_best(3, [&] {
    sum_exact = 0.0;
    for (const Ray& r : rays) sum_exact += composite_radiance(vol, r, exact).x;
  });
  double sum_render = 0.0;
  double t_render = time_best(3, [&] {
    sum_render = 0.0;
    for (const Ray& r : rays) sum_render += composite_radiance(vol, r, render).x;
  });

  std::printf("ray compositing, %d^3 volume, %d rays (best of 3)\n", vol.nx, n_rays);
  std::printf("  %-34s %8.3f ms  %7.0f ns/ray  checksum %.6f\n",
              "serial voxel walk (reference)", t_ref * 1e3, t_ref / n_rays * 1e9, sum);
  std::printf("  %-34s %8.3f ms  %7.0f ns/ray  checksum %.6f\n",
              "compositor, nearest per-voxel", t_exact * 1e3, t_exact / n_rays * 1e9,
              sum_exact);
  std::printf("  %-34s %8.3f ms  %7.0f ns/ray  checksum %.6f\n",
              "compositor, trilinear x128", t_render * 1e3, t_render / n_rays * 1e9,
              sum_render);
  std::printf("\n");
}

void bench_photometric_gradient(const VsgVolume& vol) {
  Observation pano;
  pano.kind = ObservationKind::kPanorama;
  pano.position = Vec3{0.2, 0.1, -0.3};

  RenderSettings rs;
  rs.composite.n_samples = 64;

  PanoramaConfig pc;
  pc.width = 96;
  pc.height = 48;
  pc.composite = rs.composite;
  pano.image = render_panorama(vol, pano.position, pc);

  std::vector<Observation> panos{pano};
  const int64_t n_pixels = int64_t(pc.width) * pc.height;

  int hw = thread_count();
  std::printf("photometric gradient, %dx%d panorama, %lld pixels (best of 3)\n", pc.width,
              pc.height, static_cast<long long>(n_pixels));

  double t1 = 0.0;
  for (int threads : {1, hw}) {
    set_thread_count(threads);
    GradientTape tape = GradientTape::for_volume(vol);
    double t = time_best(3, [&] {
      std::fill(tape.d_volume.begin(), tape.d_volume.end(), 0.0);
      loss_light_photometric_backward(vol, panos, rs, 1.0, tape);
    });
    if (threads == 1) t1 = t;
    std::printf("  %2d thread%s %30s %8.3f ms  %7.2f us/pixel  speedup %.2fx\n", threads,
                threads == 1 ? " " : "s", "", t * 1e3, t / double(n_pixels) * 1e6, t1 / t);
    if (hw == 1) break;  // single-core host: one row says it all
  }
  set_thread_count(hw);
}

}  // namespace

int main() {
  apply_thread_env();
  ScenePreset preset = make_preset("two-emitters");
  VsgVolume vol = voxelize(preset.scene, preset.dims);

  bench_compositing(vol);
  bench_photometric_gradient(vol);
  return 0;
}
