#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vsglight/losses.h"

namespace vsg {

// Outcome of comparing analytic gradients against central finite differences
// on a seeded random subset of parameters.
struct GradCheckReport {
  int probes = 0;
  double max_rel_error = 0.0;
  int64_t worst_param = -1;  // index into the probed parameter vector
  std::string worst_label;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  bool passed(double tol = 1e-4) const { return max_rel_error <= tol; }
  std::string format() const;
};

// Probes n_probes coordinates of theta (distinct, seeded) with central
// differences h = 1e-4 * max(1, |theta_i|) and compares against `analytic`.
// Relative error uses the denominator max(|analytic|, |numeric|, 1e-8).
// `label` names a coordinate in the report; null gives plain indices.
GradCheckReport grad_check(const std::function<double(const std::vector<double>&)>& f,
                           const std::vector<double>& theta, const std::vector<double>& analytic,
                           int n_probes, uint64_t seed,
                           const std::function<std::string(int64_t)>& label = nullptr);

// Self-contained end-to-end check: a seeded random volume plus synthetic
// surface buffers and observations activating every loss term, probed in the
// raw fitting parameterization (opacity as a logit). The generated volume
// keeps lobe axes long and opacities interior so every probed coordinate is
// differentiable. The CLI maps a failed report to exit code 2.
GradCheckReport grad_check_full_chain(int dims = 16, int n_probes = 1000, uint64_t seed = 0);

}  // namespace vsg
