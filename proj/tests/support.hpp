#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "airsplat/camera.hpp"
#include "airsplat/geometry.hpp"
#include "airsplat/image.hpp"
#include "airsplat/raster.hpp"
#include "airsplat/splat.hpp"

namespace airsplat::testing {

/// Closed axis-aligned unit cube [0, 1]^3, outward winding.
TriMesh unit_cube();

/// Open tube of `ring` vertices per ring along +z.
TriMesh tube(double radius, double length, int ring, int rings);

/// Independent triangles in random positions, with a random displacement
/// field of up to `max_delta` mm per vertex.
BreathingMesh random_breathing_mesh(std::mt19937_64& rng, int faces,
                                    double max_delta);

/// Small scene in front of a camera for renderer checks: loose triangles
/// 8 to 14 mm ahead, each carrying a few Gaussians of a few pixels.
struct Scene {
  BreathingMesh mesh;
  GaussianCloud cloud;
  Camera camera;
};

struct SceneOptions {
  int width = 64;
  int height = 64;
  int faces = 8;
  int gaussians = 24;
  double min_opacity = 0.3;
  double max_opacity = 0.95;
  double sh_scale = 0.3;      // linear SH terms drawn in [-s, s]
  double delta_scale = 1.0;   // displacement field magnitude, mm
};

Scene random_scene(std::uint64_t seed, const SceneOptions& options = {});

/// Per-pixel, per-Gaussian compositing straight from the definition: no
/// kernel truncation, no binning, std::exp.
RenderOutput reference_render(const GaussianCloud& cloud,
                              const std::vector<Vec3>& vertices,
                              const std::vector<Face>& faces,
                              const Camera& camera);

Image random_image(std::mt19937_64& rng, int width, int height, int channels,
                   double lo = 0.0, double hi = 1.0);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

double max_abs_diff(const Image& a, const Image& b);

/// |a - b| <= atol or |a - b| <= rtol * max(|a|, |b|).
bool gradients_agree(double analytic, double numeric, double rtol = 1e-3,
                     double atol = 1e-6);

struct GradientCheck {
  int checked = 0;
  int failed = 0;
  std::string first_failure;  // empty when all agree

  void record(bool ok, const std::string& what, double analytic, double numeric);
  void merge(const GradientCheck& other);
};

/// Central differences (h = 1e-4) of sum(weights * rgb) against
/// render_backward for every bary_logit, log_scale, SH coefficient and
/// vertex coordinate of a random 10-Gaussian scene at 32x32.
GradientCheck check_render_gradients(std::uint64_t seed);

/// Central difference of the full per-frame loss in theta against the
/// chained vertex-gradient estimate from evaluate_frame.
GradientCheck check_theta_gradient(std::uint64_t seed);

}  // namespace airsplat::testing
