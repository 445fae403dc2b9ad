#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "airsplat/geometry.hpp"

namespace airsplat {

constexpr int kShBasis = 4;
constexpr int kShCoeffs = kShBasis * 3;

/// Real first-order SH basis constants.
constexpr double kShC0 = 0.28209479177387814;
constexpr double kShC1 = 0.4886025119029199;

/// SH coefficients stored basis-major: sh[basis * 3 + channel].
using ShCoeffs = std::array<double, kShCoeffs>;

/// Thin-disc Gaussian owned by one mesh triangle.
///
/// Position is the softmax-barycentric combination of the parent face's
/// vertices, so it follows any deformation of the mesh. Opacity is set when
/// the Gaussian is created and is never touched by the optimizer.
struct AnchoredGaussian {
  int face_id = 0;
  std::array<double, 3> bary_logits{};
  std::array<double, 2> log_scales{};
  ShCoeffs sh{};
  double opacity = 0.8;

  std::array<double, 3> barycentrics() const;
};

struct GaussianCloud {
  std::vector<AnchoredGaussian> gaussians;
  double normal_scale = 1e-2;  // fixed thickness along the face normal, mm

  std::size_t size() const { return gaussians.size(); }
  /// Throws AnchoringError if any face_id is out of range for `face_count`.
  void check_anchoring(std::size_t face_count) const;
};

std::array<double, 3> softmax3(const std::array<double, 3>& logits);

Vec3 resolve_position(const AnchoredGaussian& g,
                      const std::vector<Vec3>& vertices,
                      const std::vector<Face>& faces);

Mat3 resolve_covariance(const AnchoredGaussian& g, const FaceFrame& frame,
                        double normal_scale);

/// Tiles every face with max(1, round(density * area)) Gaussians.
GaussianCloud seed_gaussians(const TriMesh& mesh, double per_area_density,
                             std::uint64_t rng_seed);

/// Basis values (Y00, Y1-1, Y10, Y11) for a unit direction.
std::array<double, kShBasis> sh_basis(const Vec3& unit_dir);

/// View-dependent colour, offset by 0.5 and clamped to [0, 1].
std::array<double, 3> evaluate_sh(const ShCoeffs& sh, const Vec3& view_dir);

void write_cloud_json(const std::filesystem::path& path,
                      const GaussianCloud& cloud,
                      const std::string& mesh_file);
GaussianCloud read_cloud_json(const std::filesystem::path& path,
                              std::string* mesh_file = nullptr);

}  // namespace airsplat
