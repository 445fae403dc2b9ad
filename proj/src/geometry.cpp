#include "airsplat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "airsplat/camera.hpp"
#include "airsplat/error.hpp"

namespace airsplat {

void TriMesh::validate() const {
  if (vertices.size() < 3 || faces.empty()) {
    throw SpecError("mesh needs at least 3 vertices and 1 face");
  }
  const int nv = static_cast<int>(vertices.size());
  for (const Face& f : faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= nv) throw SpecError("face index out of range");
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw SpecError("face repeats a vertex index");
    }
  }
}

double TriMesh::mean_edge_length() const {
  double sum = 0.0;
  for (const Face& f : faces) {
    for (int e = 0; e < 3; ++e) {
      sum += (vertices[f[(e + 1) % 3]] - vertices[f[e]]).norm();
    }
  }
  return faces.empty() ? 0.0 : sum / (3.0 * faces.size());
}

BreathingMesh BreathingMesh::from_pair(const TriMesh& insp,
                                       const TriMesh& exp) {
  if (insp.vertices.size() != exp.vertices.size() ||
      insp.faces != exp.faces) {
    throw SpecError("paired meshes must share vertex count and face list");
  }
  BreathingMesh bm;
  bm.insp = insp;
  bm.delta.resize(insp.vertices.size());
  for (std::size_t i = 0; i < insp.vertices.size(); ++i) {
    bm.delta[i] = exp.vertices[i] - insp.vertices[i];
  }
  return bm;
}

std::vector<Vec3> BreathingMesh::expiration_vertices() const {
  return deform_mesh(*this, 1.0);
}

void BreathingMesh::validate() const {
  insp.validate();
  if (delta.size() != insp.vertices.size()) {
    throw SpecError("displacement field length differs from vertex count");
  }
}

std::vector<Vec3> deform_mesh(const BreathingMesh& bm, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw DomainError("breathing phase must lie in [0, 1]");
  }
  std::vector<Vec3> out(bm.insp.vertices.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = bm.insp.vertices[i] + alpha * bm.delta[i];
  }
  return out;
}

Mat3 FaceFrame::rotation() const {
  Mat3 r;
  r.col(0) = tangent;
  r.col(1) = bitangent;
  r.col(2) = normal;
  return r;
}

FaceFrame face_frame(const std::vector<Vec3>& vertices, const Face& face) {
  const int nv = static_cast<int>(vertices.size());
  for (int idx : face) {
    if (idx < 0 || idx >= nv) throw IndexError("face index out of range");
  }
  const Vec3& v0 = vertices[face[0]];
  const Vec3& v1 = vertices[face[1]];
  const Vec3& v2 = vertices[face[2]];
  const Vec3 e1 = v1 - v0;
  const Vec3 cross = e1.cross(v2 - v0);
  if (0.5 * cross.norm() <= 1e-12) {
    throw DegenerateFaceError("face has near-zero area");
  }
  FaceFrame fr;
  fr.origin = (v0 + v1 + v2) / 3.0;
  fr.normal = cross.normalized();
  fr.tangent = (e1 - e1.dot(fr.normal) * fr.normal).normalized();
  fr.bitangent = fr.normal.cross(fr.tangent);
  return fr;
}

PlaneContour slice_mesh_plane(const std::vector<Vec3>& vertices,
                              const std::vector<Face>& faces,
                              const Plane& plane) {
  std::vector<double> dist(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    dist[i] = plane.signed_distance(vertices[i]);
  }
  std::map<EdgeId, Vec3> crossings;
  for (const Face& f : faces) {
    for (int e = 0; e < 3; ++e) {
      const int a = std::min(f[e], f[(e + 1) % 3]);
      const int b = std::max(f[e], f[(e + 1) % 3]);
      const double da = dist[a];
      const double db = dist[b];
      // Strictly opposite sides only; on-plane vertices never cross.
      if (!((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0))) continue;
      const EdgeId id{a, b};
      if (crossings.contains(id)) continue;
      const double t = da / (da - db);
      crossings.emplace(id, vertices[a] + t * (vertices[b] - vertices[a]));
    }
  }
  PlaneContour out;
  out.entries.reserve(crossings.size());
  for (const auto& [id, p] : crossings) out.entries.push_back({id, p});
  return out;
}

namespace {

// Pairs of entries sharing an edge id; both contours are sorted by edge id.
template <typename Fn>
std::size_t for_each_match(const PlaneContour& a, const PlaneContour& b,
                           Fn&& fn) {
  std::size_t i = 0, j = 0, matched = 0;
  while (i < a.entries.size() && j < b.entries.size()) {
    if (a.entries[i].edge < b.entries[j].edge) {
      ++i;
    } else if (b.entries[j].edge < a.entries[i].edge) {
      ++j;
    } else {
      fn(a.entries[i], b.entries[j]);
      ++matched;
      ++i;
      ++j;
    }
  }
  return matched;
}

}  // namespace

ContourComparison contour_rmse(const PlaneContour& a, const PlaneContour& b) {
  double sum_sq = 0.0;
  const std::size_t matched =
      for_each_match(a, b, [&](const ContourEntry& ea, const ContourEntry& eb) {
        sum_sq += (ea.point - eb.point).squaredNorm();
      });
  if (matched == 0) throw NoOverlapError("contours share no edges");
  ContourComparison out;
  out.matched = matched;
  out.unmatched = a.entries.size() + b.entries.size() - 2 * matched;
  out.rmse = std::sqrt(sum_sq / matched);
  return out;
}

double target_displacement(const PlaneContour& a, const PlaneContour& b,
                           const Camera& camera) {
  // In a slice through the camera centre normal to the optical axis every
  // point is at 90 degrees, so near-equal angles fall back to the point
  // nearest the camera; entries arrive in edge order, so the lower edge wins
  // any remaining tie.
  constexpr double kAngleTie = 1e-9;
  const Vec3 center = camera.center();
  const Vec3 axis = camera.optical_axis();
  double best_cos = -std::numeric_limits<double>::infinity();
  double best_dist = std::numeric_limits<double>::infinity();
  double best = 0.0;
  const std::size_t matched =
      for_each_match(a, b, [&](const ContourEntry& ea, const ContourEntry& eb) {
        const Vec3 ray = ea.point - center;
        const double len = ray.norm();
        const double c = len > 0.0 ? axis.dot(ray) / len : 1.0;
        const bool better =
            c > best_cos + kAngleTie ||
            (c >= best_cos - kAngleTie && len < best_dist);
        if (better) {
          best_cos = std::max(c, best_cos);
          best_dist = len;
          best = (ea.point - eb.point).norm();
        }
      });
  if (matched == 0) throw NoOverlapError("contours share no edges");
  return best;
}

TriMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file " + path.string());
  TriMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z())) {
        throw IoError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed vertex");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      Face f;
      if (!(ss >> f[0] >> f[1] >> f[2])) {
        throw IoError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed face");
      }
      for (int& idx : f) --idx;
      mesh.faces.push_back(f);
    } else {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": unsupported OBJ record '" + tag + "'");
    }
  }
  mesh.validate();
  return mesh;
}

void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh file " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  for (const Vec3& v : mesh.vertices) {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const Face& f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) throw IoError("failed writing mesh file " + path.string());
}

}  // namespace airsplat
