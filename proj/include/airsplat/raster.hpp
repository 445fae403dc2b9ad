#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "airsplat/camera.hpp"
#include "airsplat/geometry.hpp"
#include "airsplat/image.hpp"
#include "airsplat/splat.hpp"

namespace airsplat {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Points closer than this (camera-space z, mm) are culled.
constexpr double kNearPlane = 0.1;
/// Isotropic screen-space variance added to every projected Gaussian.
constexpr double kCovarianceFloor = 0.3;
/// Front-to-back compositing stops once transmittance drops below this.
constexpr double kMinTransmittance = 1e-4;
/// Kernel support: contributions with d^T S^-1 d above this are zero.
constexpr double kMaxMahalanobisSq = 32.0;
/// Centres projecting further than this fraction of the image size outside
/// the frame are culled; the local affine projection is poor out there.
constexpr double kGuardBand = 0.3;
/// Splat depth is reported only where accumulated opacity reaches this.
constexpr double kMinDepthAlpha = 1e-3;

struct ProjectedGaussian {
  Vec2 mean;   // pixels
  Mat2 cov;    // pixels^2, includes the floor
  double depth = 0.0;  // camera-space z, mm
};

/// EWA projection of a 3-D Gaussian. Empty when culled.
std::optional<ProjectedGaussian> project_gaussian(const Vec3& mu,
                                                  const Mat3& cov,
                                                  const Camera& camera);

struct RenderSettings {
  int workers = 1;
  int band_rows = 16;  // rows per work item
};

struct RenderOutput {
  Image rgb;    // 3 channels, [0, 1]
  /// Expected depth: each splat contributes the depth where the pixel ray
  /// meets its disc plane, limited to the disc's kernel support. 0 where
  /// empty.
  Image depth;
  Image alpha;  // accumulated opacity
};

struct RenderGradients {
  std::vector<std::array<double, 3>> bary_logits;
  std::vector<std::array<double, 2>> log_scales;
  std::vector<ShCoeffs> sh;
  std::vector<Vec3> vertices;
};

/// Alpha-composites the cloud front to back over a black background.
/// Output is bitwise identical for any worker count.
RenderOutput render(const GaussianCloud& cloud,
                    const std::vector<Vec3>& vertices,
                    const std::vector<Face>& faces, const Camera& camera,
                    const RenderSettings& settings = {});

/// Gradients of a scalar loss given dLoss/dRGB for the image `render`
/// would produce with the same inputs.
RenderGradients render_backward(const GaussianCloud& cloud,
                                const std::vector<Vec3>& vertices,
                                const std::vector<Face>& faces,
                                const Camera& camera,
                                const Image& loss_grad_rgb,
                                const RenderSettings& settings = {});

/// Renders once, asks `loss_grad` for dLoss/dRGB of that image, and
/// backpropagates it; equivalent to render() followed by render_backward().
RenderOutput render_and_backward(
    const GaussianCloud& cloud, const std::vector<Vec3>& vertices,
    const std::vector<Face>& faces, const Camera& camera,
    const std::function<Image(const RenderOutput&)>& loss_grad,
    RenderGradients& grads, const RenderSettings& settings = {});

/// Z-buffered triangle rasterization of camera-space depth, +inf where empty.
Image render_mesh_depth(const std::vector<Vec3>& vertices,
                        const std::vector<Face>& faces, const Camera& camera);

}  // namespace airsplat
