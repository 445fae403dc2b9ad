#pragma once

#include <array>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace airsplat {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Face = std::array<int, 3>;

/// Triangle surface mesh in millimetres. Faces index `vertices` (0-based).
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  /// Throws SpecError if any structural invariant is violated.
  void validate() const;
  double mean_edge_length() const;
};

/// Inspiration mesh plus the per-vertex displacement towards expiration.
///
/// The mesh at breathing phase a is `insp.vertices + a * delta`: a = 0 is
/// full inspiration and a = 1 full expiration.
struct BreathingMesh {
  TriMesh insp;
  std::vector<Vec3> delta;

  static BreathingMesh from_pair(const TriMesh& insp, const TriMesh& exp);
  std::vector<Vec3> expiration_vertices() const;
  void validate() const;
};

/// Orthonormal frame attached to a triangle; `normal` follows the winding.
struct FaceFrame {
  Vec3 origin;
  Vec3 normal;
  Vec3 tangent;
  Vec3 bitangent;

  /// Columns are (tangent, bitangent, normal).
  Mat3 rotation() const;
};

struct Plane {
  Vec3 normal;  // unit
  double offset = 0.0;  // plane is {x : normal . x == offset}

  static Plane through(const Vec3& point, const Vec3& unit_normal) {
    return {unit_normal, unit_normal.dot(point)};
  }
  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

using EdgeId = std::pair<int, int>;  // (lower vertex index, higher)

struct ContourEntry {
  EdgeId edge;
  Vec3 point;
};

/// Mesh cross-section: one point per crossing edge, ordered by edge id.
struct PlaneContour {
  std::vector<ContourEntry> entries;
};

struct ContourComparison {
  double rmse = 0.0;
  std::size_t matched = 0;
  std::size_t unmatched = 0;  // edges present in only one contour

  double matched_fraction() const {
    const auto total = matched + unmatched;
    return total == 0 ? 0.0 : static_cast<double>(matched) / total;
  }
};

struct Camera;

/// Vertices at breathing phase `alpha` in [0, 1]; throws DomainError outside.
std::vector<Vec3> deform_mesh(const BreathingMesh& bm, double alpha);

FaceFrame face_frame(const std::vector<Vec3>& vertices, const Face& face);

PlaneContour slice_mesh_plane(const std::vector<Vec3>& vertices,
                              const std::vector<Face>& faces,
                              const Plane& plane);

/// RMSE over edges present in both contours. Throws NoOverlapError when
/// the contours share no edge.
ContourComparison contour_rmse(const PlaneContour& a, const PlaneContour& b);

/// Displacement of the matched contour point whose position in `a` makes
/// the smallest angle with the camera's optical axis. Angles within 1e-9
/// count as equal and go to the point nearest the camera centre.
double target_displacement(const PlaneContour& a, const PlaneContour& b,
                           const Camera& camera);

// OBJ subset: `v x y z` and `f i j k` lines only.
TriMesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const TriMesh& mesh);

}  // namespace airsplat
