#include "airsplat/camera.hpp"

#include <cmath>
#include <numbers>

#include "airsplat/error.hpp"

namespace airsplat {

Intrinsics Intrinsics::from_fov(int width, int height, double hfov_degrees) {
  Intrinsics k;
  k.width = width;
  k.height = height;
  const double half = 0.5 * hfov_degrees * std::numbers::pi / 180.0;
  k.fx = 0.5 * width / std::tan(half);
  k.fy = k.fx;
  k.cx = 0.5 * (width - 1);
  k.cy = 0.5 * (height - 1);
  return k;
}

void Camera::validate() const {
  if (!(k.fx > 0.0) || !(k.fy > 0.0)) {
    throw DomainError("camera focal lengths must be positive");
  }
  if (k.width < 8 || k.height < 8) {
    throw DomainError("camera resolution must be at least 8x8");
  }
  const Mat3 r = rotation();
  if (!(r * r.transpose()).isApprox(Mat3::Identity(), 1e-6) ||
      std::abs(r.determinant() - 1.0) > 1e-6) {
    throw DomainError("camera pose rotation is not a proper rotation");
  }
  if (pose.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) {
    throw DomainError("camera pose bottom row must be (0, 0, 0, 1)");
  }
}

Camera Camera::look_along(const Intrinsics& k, const Vec3& center,
                          const Vec3& forward, const Vec3& up) {
  const Vec3 z = forward.normalized();
  Vec3 y = -(up - up.dot(z) * z);
  if (y.norm() < 1e-12) {
    throw DomainError("camera up vector is parallel to the view direction");
  }
  y.normalize();
  const Vec3 x = y.cross(z);
  Camera cam;
  cam.k = k;
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  cam.pose.topLeftCorner<3, 3>() = r;
  cam.pose.topRightCorner<3, 1>() = -r * center;
  return cam;
}

}  // namespace airsplat
