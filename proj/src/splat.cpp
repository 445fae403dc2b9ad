#include "airsplat/splat.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "airsplat/error.hpp"

namespace airsplat {

std::array<double, 3> softmax3(const std::array<double, 3>& logits) {
  const double m = std::max({logits[0], logits[1], logits[2]});
  std::array<double, 3> e{std::exp(logits[0] - m), std::exp(logits[1] - m),
                          std::exp(logits[2] - m)};
  const double s = e[0] + e[1] + e[2];
  return {e[0] / s, e[1] / s, e[2] / s};
}

std::array<double, 3> AnchoredGaussian::barycentrics() const {
  return softmax3(bary_logits);
}

void GaussianCloud::check_anchoring(std::size_t face_count) const {
  for (const auto& g : gaussians) {
    if (g.face_id < 0 || static_cast<std::size_t>(g.face_id) >= face_count) {
      throw AnchoringError("Gaussian anchored to face " +
                           std::to_string(g.face_id) + " of a " +
                           std::to_string(face_count) + "-face mesh");
    }
  }
}

Vec3 resolve_position(const AnchoredGaussian& g,
                      const std::vector<Vec3>& vertices,
                      const std::vector<Face>& faces) {
  if (g.face_id < 0 || static_cast<std::size_t>(g.face_id) >= faces.size()) {
    throw IndexError("Gaussian face_id out of range");
  }
  const Face& f = faces[g.face_id];
  const auto lam = g.barycentrics();
  return lam[0] * vertices[f[0]] + lam[1] * vertices[f[1]] +
         lam[2] * vertices[f[2]];
}

Mat3 resolve_covariance(const AnchoredGaussian& g, const FaceFrame& frame,
                        double normal_scale) {
  const Mat3 r = frame.rotation();
  const Vec3 var(std::exp(2.0 * g.log_scales[0]),
                 std::exp(2.0 * g.log_scales[1]),
                 normal_scale * normal_scale);
  return r * var.asDiagonal() * r.transpose();
}

GaussianCloud seed_gaussians(const TriMesh& mesh, double per_area_density,
                             std::uint64_t rng_seed) {
  if (mesh.faces.empty() || mesh.vertices.empty()) {
    throw EmptyMeshError("cannot seed Gaussians on an empty mesh");
  }
  if (!(per_area_density > 0.0)) {
    throw DomainError("Gaussian density must be positive");
  }
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> logit(-1.0, 1.0);

  GaussianCloud cloud;
  cloud.normal_scale = 1e-2 * mesh.mean_edge_length();
  for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Face& f = mesh.faces[fi];
    const Vec3& v0 = mesh.vertices[f[0]];
    const double area =
        0.5 * (mesh.vertices[f[1]] - v0).cross(mesh.vertices[f[2]] - v0).norm();
    const long count =
        std::max(1L, std::lround(per_area_density * area));
    const double log_scale = std::log(std::max(std::sqrt(area) / 2.0, 1e-6));
    for (long n = 0; n < count; ++n) {
      AnchoredGaussian g;
      g.face_id = static_cast<int>(fi);
      for (double& b : g.bary_logits) b = logit(rng);
      g.log_scales = {log_scale, log_scale};
      g.sh.fill(0.0);  // evaluates to mid-gray through the +0.5 offset
      g.opacity = 0.8;
      cloud.gaussians.push_back(g);
    }
  }
  return cloud;
}

std::array<double, kShBasis> sh_basis(const Vec3& d) {
  return {kShC0, -kShC1 * d.y(), kShC1 * d.z(), -kShC1 * d.x()};
}

std::array<double, 3> evaluate_sh(const ShCoeffs& sh, const Vec3& view_dir) {
  const double n = view_dir.norm();
  const Vec3 d = n > 0.0 ? Vec3(view_dir / n) : Vec3(0, 0, 1);
  const auto y = sh_basis(d);
  std::array<double, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    double v = 0.5;
    for (int k = 0; k < kShBasis; ++k) v += sh[k * 3 + c] * y[k];
    rgb[c] = std::clamp(v, 0.0, 1.0);
  }
  return rgb;
}

void write_cloud_json(const std::filesystem::path& path,
                      const GaussianCloud& cloud,
                      const std::string& mesh_file) {
  nlohmann::json face_id = nlohmann::json::array();
  nlohmann::json bary = nlohmann::json::array();
  nlohmann::json scales = nlohmann::json::array();
  nlohmann::json sh = nlohmann::json::array();
  nlohmann::json opacity = nlohmann::json::array();
  for (const auto& g : cloud.gaussians) {
    face_id.push_back(g.face_id);
    bary.push_back(g.bary_logits);
    scales.push_back(g.log_scales);
    sh.push_back(g.sh);
    opacity.push_back(g.opacity);
  }
  const nlohmann::json doc = {{"mesh", mesh_file},
                              {"normal_scale", cloud.normal_scale},
                              {"face_id", face_id},
                              {"bary_logits", bary},
                              {"log_scales", scales},
                              {"sh", sh},
                              {"opacity", opacity}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump() << '\n';
}

GaussianCloud read_cloud_json(const std::filesystem::path& path,
                              std::string* mesh_file) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
    GaussianCloud cloud;
    cloud.normal_scale = doc.at("normal_scale").get<double>();
    const auto& face_id = doc.at("face_id");
    const auto& bary = doc.at("bary_logits");
    const auto& scales = doc.at("log_scales");
    const auto& sh = doc.at("sh");
    const auto& opacity = doc.at("opacity");
    const std::size_t n = face_id.size();
    if (bary.size() != n || scales.size() != n || sh.size() != n ||
        opacity.size() != n) {
      throw IoError(path.string() + ": Gaussian arrays differ in length");
    }
    cloud.gaussians.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& g = cloud.gaussians[i];
      g.face_id = face_id[i].get<int>();
      g.bary_logits = bary[i].get<std::array<double, 3>>();
      g.log_scales = scales[i].get<std::array<double, 2>>();
      g.sh = sh[i].get<ShCoeffs>();
      g.opacity = opacity[i].get<double>();
    }
    if (mesh_file) *mesh_file = doc.at("mesh").get<std::string>();
    return cloud;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace airsplat
