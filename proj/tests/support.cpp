#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "airsplat/optim.hpp"

namespace airsplat::testing {

namespace fs = std::filesystem;

TriMesh unit_cube() {
  TriMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  }
  m.faces = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
             {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  return m;
}

TriMesh tube(double radius, double length, int ring, int rings) {
  TriMesh m;
  for (int r = 0; r <= rings; ++r) {
    const double z = length * r / rings;
    for (int k = 0; k < ring; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / ring;
      m.vertices.emplace_back(radius * std::cos(phi), radius * std::sin(phi), z);
    }
  }
  for (int r = 0; r < rings; ++r) {
    for (int k = 0; k < ring; ++k) {
      const int a = r * ring + k;
      const int b = r * ring + (k + 1) % ring;
      const int c = (r + 1) * ring + (k + 1) % ring;
      const int d = (r + 1) * ring + k;
      m.faces.push_back({a, b, c});
      m.faces.push_back({a, c, d});
    }
  }
  return m;
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 random_vec(std::mt19937_64& rng, double s) {
  return Vec3(uniform(rng, -s, s), uniform(rng, -s, s), uniform(rng, -s, s));
}

// Random triangle around `center` whose area stays well away from zero.
void add_triangle(std::mt19937_64& rng, const Vec3& center, double size,
                  TriMesh& mesh) {
  Vec3 a, b, c;
  do {
    a = center + random_vec(rng, size);
    b = center + random_vec(rng, size);
    c = center + random_vec(rng, size);
  } while ((b - a).cross(c - a).norm() < 0.3 * size * size);
  const int base = static_cast<int>(mesh.vertices.size());
  mesh.vertices.insert(mesh.vertices.end(), {a, b, c});
  mesh.faces.push_back({base, base + 1, base + 2});
}

}  // namespace

BreathingMesh random_breathing_mesh(std::mt19937_64& rng, int faces,
                                    double max_delta) {
  BreathingMesh bm;
  for (int f = 0; f < faces; ++f) {
    add_triangle(rng, random_vec(rng, 10.0), 2.0, bm.insp);
  }
  for (std::size_t i = 0; i < bm.insp.vertices.size(); ++i) {
    bm.delta.push_back(random_vec(rng, max_delta));
  }
  return bm;
}

Scene random_scene(std::uint64_t seed, const SceneOptions& o) {
  std::mt19937_64 rng(seed);
  Scene s;
  const Intrinsics k = Intrinsics::from_fov(o.width, o.height, 60.0);
  const Vec3 forward = Vec3(uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05), 1.0);
  s.camera = Camera::look_along(k, random_vec(rng, 0.2), forward.normalized(),
                                Vec3(0.0, -1.0, 0.0));
  for (int f = 0; f < o.faces; ++f) {
    const Vec3 center = s.camera.center() +
                        Vec3(uniform(rng, -2.5, 2.5), uniform(rng, -2.5, 2.5),
                             uniform(rng, 8.0, 14.0));
    add_triangle(rng, center, 1.5, s.mesh.insp);
  }
  for (std::size_t i = 0; i < s.mesh.insp.vertices.size(); ++i) {
    s.mesh.delta.push_back(random_vec(rng, o.delta_scale));
  }
  s.cloud.normal_scale = 1e-2 * s.mesh.insp.mean_edge_length();
  for (int i = 0; i < o.gaussians; ++i) {
    AnchoredGaussian g;
    g.face_id = i % o.faces;
    for (double& b : g.bary_logits) b = uniform(rng, -1.0, 1.0);
    for (double& l : g.log_scales) l = std::log(uniform(rng, 0.15, 0.5));
    for (int c = 0; c < 3; ++c) g.sh[c] = uniform(rng, -0.6, 0.6);
    for (int j = 3; j < kShCoeffs; ++j) g.sh[j] = uniform(rng, -o.sh_scale, o.sh_scale);
    g.opacity = uniform(rng, o.min_opacity, o.max_opacity);
    s.cloud.gaussians.push_back(g);
  }
  return s;
}

RenderOutput reference_render(const GaussianCloud& cloud,
                              const std::vector<Vec3>& vertices,
                              const std::vector<Face>& faces,
                              const Camera& camera) {
  struct Item {
    std::size_t index;
    ProjectedGaussian proj;
    Mat2 inv;
    std::array<double, 3> color;
    double opacity;
    Vec3 mu, normal;
    double reach;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const AnchoredGaussian& g = cloud.gaussians[i];
    const Vec3 mu = resolve_position(g, vertices, faces);
    const Mat3 cov = resolve_covariance(g, face_frame(vertices, faces[g.face_id]),
                                        cloud.normal_scale);
    const auto proj = project_gaussian(mu, cov, camera);
    if (!proj) continue;
    const Vec3 view = (mu - camera.center()).normalized();
    const double reach = std::sqrt(kMaxMahalanobisSq) *
                         std::exp(std::max(g.log_scales[0], g.log_scales[1]));
    items.push_back({i, *proj, proj->cov.inverse(), evaluate_sh(g.sh, view),
                     g.opacity, mu, face_frame(vertices, faces[g.face_id]).normal,
                     reach});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.proj.depth < b.proj.depth;
  });

  const int w = camera.k.width, h = camera.k.height;
  RenderOutput out{Image(w, h, 3), Image(w, h, 1), Image(w, h, 1)};
  const Mat3 to_world = camera.rotation().transpose();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Camera-space z of the ray direction is 1, so ray parameter = depth.
      const Vec3 ray = to_world * Vec3((x - camera.k.cx) / camera.k.fx,
                                       (y - camera.k.cy) / camera.k.fy, 1.0);
      double trans = 1.0, depth = 0.0;
      std::array<double, 3> rgb{};
      for (const Item& it : items) {
        const Vec2 d = Vec2(x, y) - it.proj.mean;
        const double a = it.opacity * std::exp(-0.5 * d.dot(it.inv * d));
        for (int c = 0; c < 3; ++c) rgb[c] += it.color[c] * a * trans;
        const double hit = it.normal.dot(it.mu - camera.center()) / it.normal.dot(ray);
        depth += std::clamp(hit, std::max(kNearPlane, it.proj.depth - it.reach),
                            it.proj.depth + it.reach) *
                 a * trans;
        trans *= 1.0 - a;
        if (trans < kMinTransmittance) break;
      }
      const double alpha = 1.0 - trans;
      for (int c = 0; c < 3; ++c) out.rgb.at(x, y, c) = rgb[c];
      out.alpha.at(x, y) = alpha;
      out.depth.at(x, y) = alpha >= kMinDepthAlpha ? depth / alpha : 0.0;
    }
  }
  return out;
}

Image random_image(std::mt19937_64& rng, int width, int height, int channels,
                   double lo, double hi) {
  Image img(width, height, channels);
  for (double& v : img.data) v = uniform(rng, lo, hi);
  return img;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("airsplat_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  }
  return m;
}

bool gradients_agree(double analytic, double numeric, double rtol, double atol) {
  const double diff = std::abs(analytic - numeric);
  return diff <= atol ||
         diff <= rtol * std::max(std::abs(analytic), std::abs(numeric));
}

void GradientCheck::record(bool ok, const std::string& what, double analytic,
                           double numeric) {
  ++checked;
  if (ok) return;
  ++failed;
  if (first_failure.empty()) {
    std::ostringstream ss;
    ss.precision(10);
    ss << what << ": analytic " << analytic << " numeric " << numeric;
    first_failure = ss.str();
  }
}

void GradientCheck::merge(const GradientCheck& other) {
  checked += other.checked;
  failed += other.failed;
  if (first_failure.empty()) first_failure = other.first_failure;
}

GradientCheck check_render_gradients(std::uint64_t seed) {
  SceneOptions opt;
  opt.width = 32;
  opt.height = 32;
  opt.faces = 5;
  opt.gaussians = 10;
  opt.max_opacity = 0.7;
  Scene s = random_scene(seed, opt);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const Image weights = random_image(rng, opt.width, opt.height, 3, -1.0, 1.0);
  const std::vector<Face>& faces = s.mesh.insp.faces;
  std::vector<Vec3> verts = deform_mesh(s.mesh, 0.5);

  const auto loss = [&]() {
    const RenderOutput out = render(s.cloud, verts, faces, s.camera);
    double sum = 0.0;
    for (std::size_t i = 0; i < out.rgb.data.size(); ++i) {
      sum += weights.data[i] * out.rgb.data[i];
    }
    return sum;
  };
  const RenderGradients g = render_backward(s.cloud, verts, faces, s.camera, weights);

  // Small enough that a probe rarely straddles a kernel truncation edge.
  constexpr double h = 1e-6;
  GradientCheck check;
  const auto probe = [&](double& param, double analytic, const std::string& what) {
    const double saved = param;
    param = saved + h;
    const double up = loss();
    param = saved - h;
    const double down = loss();
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    check.record(gradients_agree(analytic, numeric), what, analytic, numeric);
  };
  for (std::size_t i = 0; i < s.cloud.size(); ++i) {
    AnchoredGaussian& ga = s.cloud.gaussians[i];
    const std::string tag = "seed " + std::to_string(seed) + " gaussian " + std::to_string(i);
    for (int k = 0; k < 3; ++k) probe(ga.bary_logits[k], g.bary_logits[i][k], tag + " bary_logit");
    for (int k = 0; k < 2; ++k) probe(ga.log_scales[k], g.log_scales[i][k], tag + " log_scale");
    for (int k = 0; k < kShCoeffs; ++k) probe(ga.sh[k], g.sh[i][k], tag + " sh");
  }
  for (std::size_t v = 0; v < verts.size(); ++v) {
    for (int k = 0; k < 3; ++k) {
      probe(verts[v][k], g.vertices[v][k],
            "seed " + std::to_string(seed) + " vertex " + std::to_string(v));
    }
  }
  return check;
}

GradientCheck check_theta_gradient(std::uint64_t seed) {
  SceneOptions opt;
  opt.width = 32;
  opt.height = 32;
  opt.faces = 5;
  opt.gaussians = 10;
  opt.max_opacity = 0.7;
  opt.delta_scale = 2.0;
  const Scene s = random_scene(seed, opt);
  std::mt19937_64 rng(seed ^ 0x5851f42d4c957f2dULL);
  const Image target = random_image(rng, opt.width, opt.height, 3, 0.0, 0.6);
  std::uniform_real_distribution<double> u(0.3, 2.8);
  const double theta = u(rng);
  const double prev = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  FitOptions fit;
  const Evaluation ev =
      evaluate_frame(s.cloud, s.mesh, s.camera, target, theta, prev, fit);
  // Small enough that a probe rarely straddles a kernel truncation edge.
  constexpr double h = 1e-6;
  const double up =
      evaluate_frame(s.cloud, s.mesh, s.camera, target, theta + h, prev, fit).loss;
  const double down =
      evaluate_frame(s.cloud, s.mesh, s.camera, target, theta - h, prev, fit).loss;
  const double numeric = (up - down) / (2.0 * h);
  GradientCheck check;
  check.record(gradients_agree(ev.d_theta, numeric),
               "seed " + std::to_string(seed) + " dloss/dtheta", ev.d_theta, numeric);
  return check;
}

}  // namespace airsplat::testing
