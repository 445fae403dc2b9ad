#pragma once

#include <Eigen/Dense>

#include "airsplat/geometry.hpp"

namespace airsplat {

using Mat4 = Eigen::Matrix4d;

struct Intrinsics {
  double fx = 64.0;
  double fy = 64.0;
  double cx = 63.5;
  double cy = 63.5;
  int width = 128;
  int height = 128;

  /// Symmetric pinhole with the given horizontal field of view; pixel
  /// centres sit at integer coordinates.
  static Intrinsics from_fov(int width, int height, double hfov_degrees);
};

/// Pinhole camera with a world-to-camera rigid pose. Camera axes follow the
/// x-right, y-down, z-forward convention.
struct Camera {
  Intrinsics k;
  Mat4 pose = Mat4::Identity();

  Mat3 rotation() const { return pose.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return pose.topRightCorner<3, 1>(); }
  Vec3 center() const { return -rotation().transpose() * translation(); }
  Vec3 optical_axis() const { return rotation().row(2).transpose(); }
  Vec3 to_camera(const Vec3& p) const { return rotation() * p + translation(); }

  /// Throws DomainError when intrinsics or the pose block are invalid.
  void validate() const;

  /// Pose for a camera at `center` looking along `forward`, with image-up
  /// along the component of `up` orthogonal to `forward`.
  static Camera look_along(const Intrinsics& k, const Vec3& center,
                           const Vec3& forward, const Vec3& up);
};

}  // namespace airsplat
