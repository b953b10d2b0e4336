#pragma once

#include "vsglight/math.h"

namespace vsg {

// Emission lobe of one voxel. `axis_raw` is the stored, unnormalized lobe
// axis; `sigma` is the decoded, strictly positive bandwidth.
struct SphericalGaussian {
  Vec3 color;     // peak radiance per channel, componentwise >= 0
  Vec3 axis_raw;  // normalized on evaluation; near-zero length means isotropic
  double sigma = 1.0;
};

// Lobes whose stored axis is shorter than this are isotropic: the falloff
// term is dropped entirely and the axis carries no gradient.
inline constexpr double kIsotropicAxisEps = 1e-6;

// Stored bandwidth is unconstrained; the decoded value stays positive.
inline double sigma_from_raw(double sigma_raw) { return softplus(sigma_raw) + 1e-3; }
inline double raw_from_sigma(double sigma) { return inverse_softplus(sigma - 1e-3); }
// d(sigma)/d(sigma_raw), for chaining gradients through the decode.
inline double sigma_from_raw_derivative(double sigma_raw) { return sigmoid(sigma_raw); }

// Radiance emitted toward unit direction v. Componentwise in [0, color]:
// the exponent 1 - dot(v, axis) is nonnegative for unit vectors.
inline Vec3 sg_eval(const Vec3& v, const SphericalGaussian& sg) {
  double len = length(sg.axis_raw);
  if (len < kIsotropicAxisEps) return sg.color;
  double cosine = dot(v, sg.axis_raw) / len;
  double falloff = std::exp(-(1.0 - cosine) / (sg.sigma * sg.sigma));
  return sg.color * falloff;
}

// Gradient of each output channel with respect to the lobe parameters.
// d(out_ch) = d_color_factor * d(color_ch)
//           + color_ch * (d_axis_raw . d(axis_raw) + d_sigma * d(sigma)).
// Isotropic lobes: factor 1, zero axis and sigma sensitivity.
struct SgEvalGrad {
  double d_color_factor = 1.0;  // shared falloff, identical for all channels
  Vec3 d_axis_raw;              // per unit of color_ch
  double d_sigma = 0.0;         // per unit of color_ch
};

inline SgEvalGrad sg_eval_grad(const Vec3& v, const SphericalGaussian& sg) {
  SgEvalGrad g;
  double len = length(sg.axis_raw);
  if (len < kIsotropicAxisEps) return g;
  Vec3 mu = sg.axis_raw / len;
  double cosine = dot(v, mu);
  double inv_s2 = 1.0 / (sg.sigma * sg.sigma);
  double falloff = std::exp(-(1.0 - cosine) * inv_s2);
  g.d_color_factor = falloff;
  // d(cosine)/d(axis_raw) = (v - mu * cosine) / len
  g.d_axis_raw = (v - mu * cosine) * (falloff * inv_s2 / len);
  g.d_sigma = falloff * 2.0 * (1.0 - cosine) / (sg.sigma * sg.sigma * sg.sigma);
  return g;
}

}  // namespace vsg
