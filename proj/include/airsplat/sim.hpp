#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "airsplat/camera.hpp"
#include "airsplat/dataset.hpp"
#include "airsplat/geometry.hpp"
#include "airsplat/image.hpp"

namespace airsplat {

/// Recursive binary tube tree. Lengths in mm, angles in degrees.
struct AirwaySpec {
  int tree_depth = 3;
  double root_length = 40.0;
  double root_radius = 9.0;
  double length_taper = 0.75;
  double radius_taper = 0.7;
  double branch_angle = 35.0;
  int ring_vertices = 24;
  int rings_per_segment = 16;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

/// Expiration displacement: radial contraction towards the centreline plus
/// a rigid shift along `axial_direction`, both scaled by a depth weight
/// ((1 + g) / (1 + tree_depth))^depth_weighting where g is the continuous
/// generation coordinate (branch depth plus fraction along the branch).
struct DeformationSpec {
  double radial_amplitude = 3.0;
  double axial_amplitude = 8.0;
  double depth_weighting = 1.0;
  Vec3 axial_direction = Vec3(0.0, 0.0, -1.0);

  void validate() const;
};

/// Tidal breathing: raised-cosine inhalation (phase 1 -> 0) followed by a
/// raised-cosine exhalation (0 -> 1); the cycle starts at full expiration.
struct BreathingProfile {
  double t_inhale = 1.5;
  double t_exhale = 2.5;
  double rate_scale = 1.0;

  double period() const { return (t_inhale + t_exhale) / rate_scale; }
  void validate() const;
};

struct TrajectorySpec {
  double speed = 10.0;  // mm/s
  double fps = 15.0;
  std::uint64_t endpoint_seed = 3;

  void validate() const;
};

struct SceneMaterial {
  std::array<double, 3> base_albedo{0.80, 0.45, 0.42};
  double albedo_noise_amplitude = 0.2;
  double noise_cell = 3.0;  // mm, value-noise lattice spacing
  double specular_exponent = 40.0;
  double specular_strength = 0.25;
  double light_intensity = 80.0;  // radiance at 1 mm is intensity * albedo
  std::array<double, 2> exposure_jitter_range{0.9, 1.1};
  std::uint64_t rng_seed = 5;

  void validate() const;
};

/// Sequence-level settings of the generator.
struct SequenceSpec {
  int frames = 420;
  int width = 128;
  int height = 128;
  double hfov_degrees = 90.0;

  void validate() const;
};

struct SimConfig {
  AirwaySpec airway;
  DeformationSpec deformation;
  BreathingProfile breathing;
  TrajectorySpec trajectory;
  SceneMaterial material;
  SequenceSpec sequence;
};

struct CenterlineBranch {
  int parent = -1;
  int depth = 0;
  double radius = 0.0;
  std::vector<Vec3> polyline;  // ring centres, proximal to distal
  std::vector<int> children;
};

struct CenterlineTree {
  std::vector<CenterlineBranch> branches;  // branch 0 is the root

  std::vector<int> leaves() const;
  /// Root-to-leaf polyline without duplicated junction points.
  std::vector<Vec3> path_to(int leaf) const;
};

struct Airway {
  BreathingMesh mesh;
  CenterlineTree centerline;
  Vec3 initial_up;  // transported along trajectories
};

Airway build_airway(const AirwaySpec& spec, const DeformationSpec& dspec);

/// Phase at time t >= 0 (s); throws DomainError for negative t.
double breathing_profile(const BreathingProfile& profile, double t);

struct TimedPose {
  double time = 0.0;
  double arc_length = 0.0;
  Camera camera;
};

/// One distal pass from the root to a seeded leaf, optical axis along the
/// local tangent, up vector parallel-transported.
std::vector<TimedPose> centerline_trajectory(const Airway& airway,
                                             const TrajectorySpec& spec,
                                             const Intrinsics& intrinsics);

/// Index into a single pass of `pass_length` poses for frame `frame` when
/// the scope advances and retracts repeatedly.
std::size_t ping_pong_index(std::size_t frame, std::size_t pass_length);

struct GroundTruthFrame {
  Image rgb;
  Image depth;  // camera-space z, +inf where the ray escapes
};

/// Ray-cast rendering with a point light at the camera centre.
/// `texture_vertices` (same topology) anchor the albedo pattern to the
/// tissue; when empty the deformed positions are used.
GroundTruthFrame render_ground_truth(const std::vector<Vec3>& vertices,
                                     const std::vector<Face>& faces,
                                     const Camera& camera,
                                     const SceneMaterial& material,
                                     double exposure_gain,
                                     const std::vector<Vec3>& texture_vertices = {});

/// Seeded 3-D value noise in [-1, 1].
double value_noise(const Vec3& p, std::uint64_t seed);

struct DatasetSummary {
  std::size_t frame_count = 0;
  double max_displacement = 0.0;  // mm
};

DatasetSummary generate_dataset(const SimConfig& config,
                                const std::filesystem::path& out_dir);

}  // namespace airsplat
