#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "airsplat/camera.hpp"
#include "airsplat/dataset.hpp"
#include "airsplat/geometry.hpp"
#include "airsplat/image.hpp"
#include "airsplat/raster.hpp"
#include "airsplat/splat.hpp"

namespace airsplat {

constexpr double kDefaultLeak = 0.05;

// ---------------------------------------------------------------------------
// Breathing-phase parameterisation
// ---------------------------------------------------------------------------

struct Activation {
  double alpha;
  double d_alpha_d_theta;
};

/// Leaky raised-cosine map from theta in [0, pi] to a phase in [0, 1]:
///   alpha = (1 - eps) (1 - cos theta) / 2 + eps theta / pi
/// Its slope never falls below eps / pi, so the phase keeps receiving
/// gradient at full inspiration and expiration.
Activation activation(double theta, double epsilon = kDefaultLeak);

/// Unique theta in [0, pi] with activation(theta) == alpha (bisection).
double inverse_activation(double alpha, double epsilon = kDefaultLeak);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct LossWeights {
  double w_c = 1.0;  // photometric
  double w_s = 0.2;  // SSIM share of the photometric term
  double w_t = 0.1;  // temporal smoothness of the phase

  void validate() const;
};

struct PhotometricLoss {
  double value = 0.0;
  Image grad;  // d value / d rendered
};

/// w_c [(1 - w_s) mean|r - t| + w_s (1 - SSIM(r, t))] and its gradient.
PhotometricLoss photometric_loss(const Image& rendered, const Image& target,
                                 const LossWeights& weights);

struct TemporalLoss {
  double value = 0.0;
  double d_alpha = 0.0;
};

/// w_t (alpha - prev)^2; zero when there is no previous frame.
TemporalLoss temporal_loss(double alpha, std::optional<double> prev,
                           double w_t);

// ---------------------------------------------------------------------------
// First-frame initialisation
// ---------------------------------------------------------------------------

struct GridSearchResult {
  double theta = 0.0;
  double alpha = 0.0;
  double rmse = 0.0;
};

/// Picks alpha from {i / (grid_size - 1)} minimising depth RMSE between the
/// deformed mesh and `depth_gt` (ties go to the smaller alpha).
GridSearchResult init_first_frame_phase(const BreathingMesh& bm,
                                        const Camera& camera,
                                        const Image& depth_gt,
                                        int grid_size = 33,
                                        double epsilon = kDefaultLeak);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  /// Bias-corrected Adam update in place. Throws NonFiniteGradientError
  /// before touching anything if a gradient is NaN or infinite.
  void update(std::span<double> params, std::span<const double> grads,
              double lr);
  void reset() { *this = AdamState{}; }
};

/// Adam update of theta followed by clamping to [0, pi].
double adam_step_theta(AdamState& state, double theta, double grad, double lr);

// ---------------------------------------------------------------------------
// Per-frame schedule
// ---------------------------------------------------------------------------

struct Schedule {
  int iters_phase_only = 30;
  int iters_appearance_only = 50;
  int iters_joint = 40;
  double lr_theta = 0.05;
  double lr_bary_logits = 0.01;
  double lr_log_scales = 0.005;
  double lr_sh = 0.0025;

  void validate() const;
};

/// Adam moments for the appearance blocks; these persist across frames.
struct AppearanceState {
  AdamState bary_logits;
  AdamState log_scales;
  AdamState sh;
};

struct FitOptions {
  Schedule schedule;
  LossWeights weights;
  double epsilon = kDefaultLeak;
  /// Tangential scales are capped at this multiple of sqrt(parent face area)
  /// on the inspiration mesh after every appearance step.
  double max_scale_factor = 2.0;
  RenderSettings render;
};

struct FrameFit {
  double theta = 0.0;
  double alpha_hat = 0.0;
  double final_loss = 0.0;
};

/// Which parameter blocks one optimisation sweep may update.
enum class Stage { kPhaseOnly, kAppearanceOnly, kJoint };

/// Loss, dLoss/dtheta and appearance gradients at the current state.
struct Evaluation {
  double loss = 0.0;
  double photometric = 0.0;
  double d_theta = 0.0;
  RenderGradients grads;
};

/// One forward/backward pass for phase `theta` (no parameter update).
Evaluation evaluate_frame(const GaussianCloud& cloud, const BreathingMesh& bm,
                          const Camera& camera, const Image& target,
                          double theta, std::optional<double> prev_alpha,
                          const FitOptions& options);

/// Runs `iterations` Adam steps of the given stage, updating `theta` (not
/// for kAppearanceOnly) and the cloud's appearance (not for kPhaseOnly).
/// Returns the loss seen by the last iteration.
double run_stage(Stage stage, int iterations, GaussianCloud& cloud,
                 const BreathingMesh& bm, const Camera& camera,
                 const Image& target, double& theta, AdamState& theta_state,
                 std::optional<double> prev_alpha, const FitOptions& options,
                 AppearanceState& appearance);

/// Phase-only, appearance-only, then joint optimisation of one frame.
FrameFit fit_frame(GaussianCloud& cloud, const BreathingMesh& bm,
                   const Camera& camera, const Image& target,
                   std::optional<double> prev_alpha, double theta_init,
                   const FitOptions& options, AppearanceState& appearance);

// ---------------------------------------------------------------------------
// Whole sequence
// ---------------------------------------------------------------------------

struct SequenceConfig {
  FitOptions fit;
  double gaussians_per_face = 3.0;
  std::uint64_t seed = 7;
  int grid_size = 33;
  /// When set, the phase is held at this value for every frame.
  std::optional<double> frozen_phase;
  /// Appearance-only steps on frame 0; unset means the per-frame
  /// appearance budget (iters_appearance_only + iters_joint).
  std::optional<int> first_frame_iters;
  bool keep_renders = true;
};

struct PhaseTrack {
  std::vector<double> theta;
  std::vector<double> alpha_hat;
};

struct SequenceResult {
  PhaseTrack track;
  GaussianCloud cloud;
  std::vector<Image> rgb;    // final render per frame
  std::vector<Image> depth;  // expected splat depth per frame
  std::vector<double> frame_seconds;
  double total_seconds = 0.0;
};

SequenceResult fit_sequence(
    const Dataset& dataset, const SequenceConfig& config,
    const std::function<void(std::size_t, const FrameFit&)>& on_frame = {});

}  // namespace airsplat
