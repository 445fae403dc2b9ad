#include "airsplat/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "airsplat/error.hpp"
#include "airsplat/ssim.hpp"

namespace airsplat {

namespace {
constexpr double kPi = std::numbers::pi;
}

Activation activation(double theta, double epsilon) {
  if (!(theta >= 0.0 && theta <= kPi)) {
    throw DomainError("theta must lie in [0, pi]");
  }
  if (theta == 0.0) return {0.0, epsilon / kPi};
  if (theta == kPi) return {1.0, epsilon / kPi};
  return {(1.0 - epsilon) * 0.5 * (1.0 - std::cos(theta)) + epsilon * theta / kPi,
          (1.0 - epsilon) * 0.5 * std::sin(theta) + epsilon / kPi};
}

double inverse_activation(double alpha, double epsilon) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw DomainError("phase must lie in [0, 1]");
  }
  if (alpha == 0.0) return 0.0;
  if (alpha == 1.0) return kPi;
  double lo = 0.0, hi = kPi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double a = activation(mid, epsilon).alpha;
    if (a == alpha) return mid;
    (a < alpha ? lo : hi) = mid;
  }
  const double a_lo = activation(lo, epsilon).alpha;
  const double a_hi = activation(hi, epsilon).alpha;
  return std::abs(a_lo - alpha) <= std::abs(a_hi - alpha) ? lo : hi;
}

void LossWeights::validate() const {
  if (!(w_c >= 0.0) || !(w_t >= 0.0) || !(w_s >= 0.0 && w_s <= 1.0)) {
    throw DomainError("loss weights must be non-negative with w_s in [0, 1]");
  }
}

PhotometricLoss photometric_loss(const Image& rendered, const Image& target,
                                 const LossWeights& weights) {
  require_same_shape(rendered, target, "photometric_loss");
  PhotometricLoss out;
  const double n = static_cast<double>(rendered.data.size());
  double l1 = 0.0;
  out.grad = Image(rendered.width, rendered.height, rendered.channels);
  const double l1_scale = weights.w_c * (1.0 - weights.w_s) / n;
  for (std::size_t i = 0; i < rendered.data.size(); ++i) {
    const double d = rendered.data[i] - target.data[i];
    l1 += std::abs(d);
    out.grad.data[i] = d > 0.0 ? l1_scale : (d < 0.0 ? -l1_scale : 0.0);
  }
  l1 /= n;
  double ssim_value = 1.0;
  if (weights.w_s > 0.0) {
    Image ssim_grad;
    ssim_value = ssim_with_grad(rendered, target, ssim_grad);
    const double scale = -weights.w_c * weights.w_s;
    for (std::size_t i = 0; i < out.grad.data.size(); ++i) {
      out.grad.data[i] += scale * ssim_grad.data[i];
    }
  }
  out.value = weights.w_c * ((1.0 - weights.w_s) * l1 +
                             weights.w_s * (1.0 - ssim_value));
  return out;
}

TemporalLoss temporal_loss(double alpha, std::optional<double> prev,
                           double w_t) {
  if (!prev) return {};
  const double d = alpha - *prev;
  return {w_t * d * d, 2.0 * w_t * d};
}

GridSearchResult init_first_frame_phase(const BreathingMesh& bm,
                                        const Camera& camera,
                                        const Image& depth_gt, int grid_size,
                                        double epsilon) {
  if (grid_size < 2) throw DomainError("grid search needs at least 2 points");
  if (depth_gt.width != camera.k.width || depth_gt.height != camera.k.height ||
      depth_gt.channels != 1) {
    throw ShapeError("ground-truth depth does not match the camera");
  }
  GridSearchResult best;
  best.rmse = std::numeric_limits<double>::infinity();
  bool found = false;
  for (int i = 0; i < grid_size; ++i) {
    const double alpha = static_cast<double>(i) / (grid_size - 1);
    const Image d = render_mesh_depth(deform_mesh(bm, alpha), bm.insp.faces, camera);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < d.data.size(); ++p) {
      if (std::isfinite(d.data[p]) && std::isfinite(depth_gt.data[p])) {
        const double e = d.data[p] - depth_gt.data[p];
        sum += e * e;
        ++n;
      }
    }
    if (n == 0) continue;
    const double rmse = std::sqrt(sum / n);
    if (!found || rmse < best.rmse) {
      best.alpha = alpha;
      best.rmse = rmse;
      found = true;
    }
  }
  if (!found) {
    throw InsufficientDepthError("no pixel has finite depth in both images");
  }
  best.theta = inverse_activation(best.alpha, epsilon);
  return best;
}

void AdamState::update(std::span<double> params, std::span<const double> grads,
                       double lr) {
  if (params.size() != grads.size()) {
    throw ShapeError("Adam: parameter and gradient sizes differ");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw NonFiniteGradientError("non-finite gradient");
  }
  if (m.empty() && v.empty()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
  } else if (m.size() != params.size() || v.size() != params.size()) {
    throw ShapeError("Adam: moment size differs from parameters");
  }
  ++step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

double adam_step_theta(AdamState& state, double theta, double grad, double lr) {
  double p[1] = {theta};
  const double g[1] = {grad};
  state.update(p, g, lr);
  return std::clamp(p[0], 0.0, kPi);
}

void Schedule::validate() const {
  if (iters_phase_only < 1 || iters_appearance_only < 1 || iters_joint < 1) {
    throw DomainError("every sub-phase needs at least one iteration");
  }
  if (!(lr_theta > 0.0) || !(lr_bary_logits > 0.0) || !(lr_log_scales > 0.0) ||
      !(lr_sh > 0.0)) {
    throw DomainError("learning rates must be positive");
  }
}

Evaluation evaluate_frame(const GaussianCloud& cloud, const BreathingMesh& bm,
                          const Camera& camera, const Image& target,
                          double theta, std::optional<double> prev_alpha,
                          const FitOptions& options) {
  const Activation act = activation(theta, options.epsilon);
  const std::vector<Vec3> verts = deform_mesh(bm, act.alpha);
  Evaluation ev;
  double photo = 0.0;
  render_and_backward(
      cloud, verts, bm.insp.faces, camera,
      [&](const RenderOutput& out) {
        PhotometricLoss pl = photometric_loss(out.rgb, target, options.weights);
        photo = pl.value;
        return std::move(pl.grad);
      },
      ev.grads, options.render);
  const TemporalLoss tl = temporal_loss(act.alpha, prev_alpha, options.weights.w_t);
  double d_alpha = tl.d_alpha;
  for (std::size_t i = 0; i < bm.delta.size(); ++i) {
    d_alpha += ev.grads.vertices[i].dot(bm.delta[i]);
  }
  ev.photometric = photo;
  ev.loss = photo + tl.value;
  ev.d_theta = d_alpha * act.d_alpha_d_theta;
  return ev;
}

namespace {

void step_appearance(GaussianCloud& cloud, const RenderGradients& grads,
                     const Schedule& schedule, const TriMesh& anchor,
                     double max_scale_factor, AppearanceState& state) {
  const std::size_t n = cloud.size();
  std::vector<double> p, g;
  auto block = [&](AdamState& adam, int width, double lr, auto&& param,
                   auto&& grad) {
    p.resize(n * width);
    g.resize(n * width);
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < width; ++k) {
        p[i * width + k] = param(i)[k];
        g[i * width + k] = grad(i)[k];
      }
    adam.update(p, g, lr);
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < width; ++k) param(i)[k] = p[i * width + k];
  };
  auto& gs = cloud.gaussians;
  block(state.bary_logits, 3, schedule.lr_bary_logits,
        [&](std::size_t i) -> auto& { return gs[i].bary_logits; },
        [&](std::size_t i) -> const auto& { return grads.bary_logits[i]; });
  block(state.log_scales, 2, schedule.lr_log_scales,
        [&](std::size_t i) -> auto& { return gs[i].log_scales; },
        [&](std::size_t i) -> const auto& { return grads.log_scales[i]; });
  block(state.sh, kShCoeffs, schedule.lr_sh,
        [&](std::size_t i) -> auto& { return gs[i].sh; },
        [&](std::size_t i) -> const auto& { return grads.sh[i]; });
  for (AnchoredGaussian& gauss : gs) {
    const Face& f = anchor.faces[gauss.face_id];
    const Vec3& v0 = anchor.vertices[f[0]];
    const double area = 0.5 * (anchor.vertices[f[1]] - v0)
                                  .cross(anchor.vertices[f[2]] - v0)
                                  .norm();
    const double cap = std::log(max_scale_factor * std::sqrt(area));
    for (double& s : gauss.log_scales) s = std::min(s, cap);
  }
}

}  // namespace

double run_stage(Stage stage, int iterations, GaussianCloud& cloud,
                 const BreathingMesh& bm, const Camera& camera,
                 const Image& target, double& theta, AdamState& theta_state,
                 std::optional<double> prev_alpha, const FitOptions& options,
                 AppearanceState& appearance) {
  double loss = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Evaluation ev =
        evaluate_frame(cloud, bm, camera, target, theta, prev_alpha, options);
    loss = ev.loss;
    if (stage != Stage::kAppearanceOnly) {
      theta = adam_step_theta(theta_state, theta, ev.d_theta,
                              options.schedule.lr_theta);
    }
    if (stage != Stage::kPhaseOnly) {
      step_appearance(cloud, ev.grads, options.schedule, bm.insp,
                      options.max_scale_factor, appearance);
    }
  }
  return loss;
}

FrameFit fit_frame(GaussianCloud& cloud, const BreathingMesh& bm,
                   const Camera& camera, const Image& target,
                   std::optional<double> prev_alpha, double theta_init,
                   const FitOptions& options, AppearanceState& appearance) {
  options.schedule.validate();
  options.weights.validate();
  if (!(options.max_scale_factor > 0.0)) {
    throw DomainError("max_scale_factor must be > 0");
  }
  const Schedule& s = options.schedule;
  double theta = theta_init;
  AdamState theta_state;
  run_stage(Stage::kPhaseOnly, s.iters_phase_only, cloud, bm, camera, target,
            theta, theta_state, prev_alpha, options, appearance);
  run_stage(Stage::kAppearanceOnly, s.iters_appearance_only, cloud, bm, camera,
            target, theta, theta_state, prev_alpha, options, appearance);
  FrameFit fit;
  fit.final_loss =
      run_stage(Stage::kJoint, s.iters_joint, cloud, bm, camera, target, theta,
                theta_state, prev_alpha, options, appearance);
  fit.theta = theta;
  fit.alpha_hat = activation(theta, options.epsilon).alpha;
  return fit;
}

SequenceResult fit_sequence(
    const Dataset& dataset, const SequenceConfig& config,
    const std::function<void(std::size_t, const FrameFit&)>& on_frame) {
  using Clock = std::chrono::steady_clock;
  const FitOptions& opt = config.fit;
  opt.schedule.validate();
  opt.weights.validate();
  if (!(opt.max_scale_factor > 0.0)) {
    throw DomainError("max_scale_factor must be > 0");
  }
  const BreathingMesh& bm = dataset.mesh();
  const DatasetMeta& meta = dataset.meta();
  if (meta.frames.empty()) throw DatasetError("dataset has no frames");
  if (config.frozen_phase &&
      !(*config.frozen_phase >= 0.0 && *config.frozen_phase <= 1.0)) {
    throw DomainError("frozen phase must lie in [0, 1]");
  }
  if (config.first_frame_iters && *config.first_frame_iters < 0) {
    throw DomainError("first_frame_iters must be >= 0");
  }

  const auto start = Clock::now();
  SequenceResult result;
  double mean_area = 0.0;
  for (const Face& f : bm.insp.faces) {
    const Vec3& v0 = bm.insp.vertices[f[0]];
    mean_area += 0.5 * (bm.insp.vertices[f[1]] - v0)
                           .cross(bm.insp.vertices[f[2]] - v0)
                           .norm();
  }
  mean_area /= static_cast<double>(bm.insp.faces.size());
  result.cloud = seed_gaussians(bm.insp, config.gaussians_per_face / mean_area,
                                config.seed);
  GaussianCloud& cloud = result.cloud;
  AppearanceState appearance;
  const Schedule& s = opt.schedule;
  const int appearance_iters = s.iters_appearance_only + s.iters_joint;

  std::optional<double> prev_alpha;
  double theta = 0.0;
  for (std::size_t t = 0; t < meta.frames.size(); ++t) {
    const auto frame_start = Clock::now();
    const Camera cam = meta.camera(t);
    const Image target = dataset.rgb(t);
    FrameFit fit;
    AdamState theta_state;
    if (config.frozen_phase) {
      theta = inverse_activation(*config.frozen_phase, opt.epsilon);
      fit.final_loss =
          run_stage(Stage::kAppearanceOnly, appearance_iters, cloud, bm, cam,
                    target, theta, theta_state, std::nullopt, opt, appearance);
      fit.theta = theta;
      fit.alpha_hat = *config.frozen_phase;
    } else if (t == 0) {
      // No appearance model exists yet: the phase comes from depth, then
      // appearance is fitted with the phase held fixed.
      theta = init_first_frame_phase(bm, cam, dataset.depth(0),
                                     config.grid_size, opt.epsilon)
                  .theta;
      fit.final_loss = run_stage(
          Stage::kAppearanceOnly,
          config.first_frame_iters.value_or(appearance_iters), cloud, bm, cam,
          target, theta, theta_state, std::nullopt, opt, appearance);
      fit.theta = theta;
      fit.alpha_hat = activation(theta, opt.epsilon).alpha;
    } else {
      fit = fit_frame(cloud, bm, cam, target, prev_alpha, theta, opt,
                      appearance);
      theta = fit.theta;
    }
    prev_alpha = fit.alpha_hat;
    result.track.theta.push_back(fit.theta);
    result.track.alpha_hat.push_back(fit.alpha_hat);
    if (config.keep_renders) {
      RenderOutput out =
          render(cloud, deform_mesh(bm, fit.alpha_hat), bm.insp.faces, cam,
                 opt.render);
      result.rgb.push_back(std::move(out.rgb));
      result.depth.push_back(std::move(out.depth));
    }
    result.frame_seconds.push_back(
        std::chrono::duration<double>(Clock::now() - frame_start).count());
    if (on_frame) on_frame(t, fit);
  }
  result.total_seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace airsplat
