#pragma once

#include <vector>

#include "vsglight/camera.h"
#include "vsglight/image.h"
#include "vsglight/shading.h"
#include "vsglight/tape.h"
#include "vsglight/volume.h"

namespace vsg {

// Weights of the multi-task objective. All must be nonnegative.
struct LossWeights {
  double lambda_albedo = 1.0;
  double lambda_normal = 1.0;
  double lambda_depth = 1.0;
  double lambda_light = 1.0;
  double lambda_visible = 1.0;
  double lambda_reg = 0.01;
  double lambda_rerender = 1.0;
  double lambda_local = 0.5;  // inside the albedo term
  double lambda_si = 1.0;     // inside the depth term

  void validate() const;
};

enum class ObservationKind {
  kPanorama,     // LDR equirectangular image at a position
  kPerspective,  // LDR image + depth through a camera
  kAlbedoGt,     // supervision target for the predicted albedo
  kNormalGt,     // supervision target for the predicted normal
  kDepthGt,      // supervision target for the predicted depth
};

// One supervision record. Which fields are meaningful depends on kind:
// panoramas use position/orientation + image; perspective uses camera +
// image + depth; the gt kinds use camera + image (and mask for albedo).
struct Observation {
  ObservationKind kind = ObservationKind::kPanorama;
  Camera camera;
  Vec3 position;
  Mat3 orientation = Mat3::identity();
  Image image;
  Image depth;  // perspective only
  Image mask;   // albedo-gt only; 1 channel, nonzero marks locally flat gt

  void validate() const;
};

// ---------------------------------------------------------------------------
// Individual terms. Each backward ACCUMULATES scale * d(term)/d(input); the
// forward conventions are documented per term. MSE always means the mean over
// all pixels and channels, so weights are resolution-independent.
// ---------------------------------------------------------------------------

// MSE plus lambda_local times the mean L1 spatial gradient of pred, counting
// a finite-difference edge only where both endpoints are masked. The L1 term
// shares the MSE's normalization (pixel count times channels).
double loss_albedo(const Image& pred, const Image& gt, const Image& mask, double lambda_local);
void loss_albedo_backward(const Image& pred, const Image& gt, const Image& mask,
                          double lambda_local, double scale, Image& d_pred);

// Mean over pixels of arccos(clamp(gt . pred/|pred|, -1, 1)). Invariant to
// positive rescaling of pred; a zero prediction vector is an error.
double loss_normal(const Image& pred, const Image& gt);
void loss_normal_backward(const Image& pred, const Image& gt, double scale, Image& d_pred);

// Mean of (log(gt+1) - log(pred+1))^2 plus lambda_si times the mean of
// (gt - c*pred)^2 at the closed-form optimum c = sum(pred*gt)/sum(pred*pred).
// Backward treats c as the argmin (its derivative term vanishes there).
double loss_depth(const Image& pred, const Image& gt, double lambda_si, double* c_out = nullptr);
void loss_depth_backward(const Image& pred, const Image& gt, double lambda_si, double scale,
                         Image& d_pred);
double depth_si_scale(const Image& pred, const Image& gt);

// Mean over voxels of -alpha * ln(alpha), zero at alpha in {0,1} and peaked
// at 1/e; alpha is clamped to [1e-7, 1] before the log.
double loss_reg_alpha(const VsgVolume& volume);
void loss_reg_alpha_backward(const VsgVolume& volume, double scale, GradientTape& tape);

// Rendering settings shared by the photometric terms.
struct RenderSettings {
  CompositeConfig composite;
  int quad_rays = 50;            // re-render hemisphere rays per pixel
  bool share_neighbors = false;  // 9-pixel ray sharing in the re-render
  double tau = kSoftClipKnee;
};

// Mean over panoramas of the MSE between the observation and the soft-clipped
// panorama render at its pose. `subsets` (parallel to `panoramas`, empty list
// = every pixel) restricts each MSE to the given pixel indices.
double loss_light_photometric(const VsgVolume& volume, const std::vector<Observation>& panoramas,
                              const RenderSettings& rs = {},
                              const std::vector<std::vector<int64_t>>* subsets = nullptr);
void loss_light_photometric_backward(const VsgVolume& volume,
                                     const std::vector<Observation>& panoramas,
                                     const RenderSettings& rs, double scale, GradientTape& tape,
                                     const std::vector<std::vector<int64_t>>* subsets = nullptr);

// MSE between the observed LDR image and the soft-clipped perspective render
// plus, with equal weight, MSE between the observed depth and the
// alpha-composited depth.
double loss_visible(const VsgVolume& volume, const Image& image, const Image& depth,
                    const Camera& camera, const RenderSettings& rs = {},
                    const std::vector<int64_t>* subset = nullptr);
void loss_visible_backward(const VsgVolume& volume, const Image& image, const Image& depth,
                           const Camera& camera, const RenderSettings& rs, double scale,
                           GradientTape& tape, const std::vector<int64_t>* subset = nullptr);

// MSE between the observed LDR image and the Lambertian re-render of surf
// under the volume, k hemisphere rays per pixel. `grid`, when provided, fixes
// the quadrature nodes (it must match surf.normal and k); surf gradients are
// written only when the tape carries surface buffers.
double loss_rerender(const SurfaceBuffers& surf, const Camera& camera, const VsgVolume& volume,
                     const Image& image, int k, const RenderSettings& rs = {},
                     const std::vector<int64_t>* subset = nullptr,
                     const HemisphereGrid* grid = nullptr);
void loss_rerender_backward(const SurfaceBuffers& surf, const Camera& camera,
                            const VsgVolume& volume, const Image& image, int k,
                            const RenderSettings& rs, double scale, GradientTape& tape,
                            const std::vector<int64_t>* subset = nullptr,
                            const HemisphereGrid* grid = nullptr);

// ---------------------------------------------------------------------------
// Total objective
// ---------------------------------------------------------------------------

struct LossTerms {
  double albedo = 0, normal = 0, depth = 0, light = 0, visible = 0, reg = 0, rerender = 0;
  double total(const LossWeights& w) const;
};

// Pixel-index subsets for the stochastic terms; empty vector = all pixels.
struct LossSubsets {
  std::vector<std::vector<int64_t>> panoramas;  // parallel to panorama observations
  std::vector<std::vector<int64_t>> views;      // parallel to perspective observations
  std::vector<int64_t> rerender;
};

// One total-loss evaluation. The surface buffers are the prediction for the
// *-gt observations and the geometry for re-rendering; they may be null when
// no observation needs them. The re-render view is the first perspective
// observation's camera and image. `shade_grid`, when set, pins the re-render
// quadrature nodes (rebuilt from surf.normal otherwise).
struct LossProblem {
  const VsgVolume* volume = nullptr;
  const SurfaceBuffers* surf = nullptr;
  const std::vector<Observation>* observations = nullptr;
  LossWeights weights;
  RenderSettings render;
  const LossSubsets* subsets = nullptr;
  const HemisphereGrid* shade_grid = nullptr;
};

// Evaluates every active term (a term with weight zero is skipped). Throws
// NumericError naming the term if any value comes back non-finite.
LossTerms loss_forward(const LossProblem& p);

// Forward plus gradient accumulation, each term scaled by its weight. The
// tape must match the volume (and carry surface images to receive surface
// gradients). Returns the same terms as loss_forward.
LossTerms loss_backward(const LossProblem& p, GradientTape& tape);

}  // namespace vsg
