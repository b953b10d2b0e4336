#pragma once

#include <cstdint>
#include <vector>

#include "vsglight/losses.h"
#include "vsglight/volume.h"

namespace vsg {

// Optimizer configuration. The volume is always optimized; the surface
// buffers are optimized too when optimize_surface is set (otherwise they act
// as fixed inputs to the re-render and supervision terms).
struct FitOptions {
  int iterations = 2000;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int pixels_per_step = 4096;  // stochastic subset per photometric term
  int history_every = 25;      // full-loss evaluation cadence
  uint64_t seed = 0;
  bool optimize_surface = false;
  SurfaceBuffers surf;  // prediction/geometry for surface-coupled terms
  RenderSettings render;

  void validate() const;
};

struct FitHistoryRow {
  int iteration = 0;  // 0 is the initial state
  LossTerms terms;
  double total = 0.0;
};

struct FitResult {
  VsgVolume volume;      // best full-loss volume seen
  SurfaceBuffers surf;   // surface buffers at the best iteration
  std::vector<FitHistoryRow> history;
  double best_total = 0.0;
  int best_iteration = 0;
};

// Adam over the raw parameterization (opacity as a logit, bandwidth as
// sigma_raw, color and axis unconstrained with color projected to >= 0).
// Stochastic pixel subsets are redrawn each iteration from the seed;
// history rows are full (non-subsampled) evaluations. Deterministic for a
// fixed seed and thread count. A non-finite loss aborts, naming the term.
FitResult fit_volume(const VsgVolume& initial, const std::vector<Observation>& observations,
                     const LossWeights& weights, const FitOptions& opt);

}  // namespace vsg
