#include "airsplat/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "airsplat/error.hpp"
#include "airsplat/image_io.hpp"
#include "airsplat/raster.hpp"

namespace airsplat {

namespace fs = std::filesystem;

void AirwaySpec::validate() const {
  if (tree_depth < 0) throw SpecError("tree_depth must be >= 0");
  if (!(root_length > 0.0) || !(root_radius > 0.0)) {
    throw SpecError("root_length and root_radius must be > 0");
  }
  if (!(length_taper > 0.0) || !(radius_taper > 0.0)) {
    throw SpecError("tapers must be > 0");
  }
  if (!(branch_angle >= 0.0 && branch_angle < 90.0)) {
    throw SpecError("branch_angle must lie in [0, 90) degrees");
  }
  if (ring_vertices < 8) throw SpecError("ring_vertices must be >= 8");
  if (rings_per_segment < 1) throw SpecError("rings_per_segment must be >= 1");
}

void DeformationSpec::validate() const {
  if (!std::isfinite(radial_amplitude) || !std::isfinite(axial_amplitude) ||
      !std::isfinite(depth_weighting)) {
    throw SpecError("deformation parameters must be finite");
  }
  if (radial_amplitude < 0.0 || axial_amplitude < 0.0) {
    throw SpecError("deformation amplitudes must be >= 0");
  }
  if (!axial_direction.allFinite() ||
      std::abs(axial_direction.norm() - 1.0) > 1e-6) {
    throw SpecError("axial_direction must be a unit vector");
  }
}

void BreathingProfile::validate() const {
  if (!(t_inhale > 0.0) || !(t_exhale > 0.0) || !(rate_scale > 0.0) ||
      !std::isfinite(period())) {
    throw SpecError("breathing durations and rate_scale must be > 0");
  }
}

void TrajectorySpec::validate() const {
  if (!(speed > 0.0) || !std::isfinite(speed)) throw SpecError("speed must be > 0");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw SpecError("fps must be > 0");
}

void SceneMaterial::validate() const {
  for (double a : base_albedo) {
    if (!(a >= 0.0 && a <= 1.0)) throw SpecError("base_albedo must lie in [0, 1]");
  }
  if (!(albedo_noise_amplitude >= 0.0 && albedo_noise_amplitude <= 1.0)) {
    throw SpecError("albedo_noise_amplitude must lie in [0, 1]");
  }
  if (!(noise_cell > 0.0)) throw SpecError("noise_cell must be > 0");
  if (!(specular_exponent >= 0.0) || !(specular_strength >= 0.0)) {
    throw SpecError("specular parameters must be >= 0");
  }
  if (!(light_intensity > 0.0)) throw SpecError("light_intensity must be > 0");
  const auto [lo, hi] = exposure_jitter_range;
  if (!(lo > 0.0) || !(hi >= lo)) {
    throw SpecError("exposure_jitter_range must satisfy 0 < lo <= hi");
  }
}

void SequenceSpec::validate() const {
  if (frames < 1) throw SpecError("frames must be >= 1");
  if (width < 8 || height < 8) throw SpecError("resolution must be at least 8x8");
  if (!(hfov_degrees > 0.0 && hfov_degrees < 180.0)) {
    throw SpecError("hfov_degrees must lie in (0, 180)");
  }
}

// ---------------------------------------------------------------------------
// Airway
// ---------------------------------------------------------------------------

std::vector<int> CenterlineTree::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (branches[i].children.empty()) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<Vec3> CenterlineTree::path_to(int leaf) const {
  if (leaf < 0 || leaf >= static_cast<int>(branches.size())) {
    throw IndexError("branch index out of range");
  }
  std::vector<int> chain;
  for (int b = leaf; b >= 0; b = branches[b].parent) chain.push_back(b);
  std::reverse(chain.begin(), chain.end());
  std::vector<Vec3> path;
  for (int b : chain) {
    const auto& poly = branches[b].polyline;
    const std::size_t skip = path.empty() ? 0 : 1;
    path.insert(path.end(), poly.begin() + skip, poly.end());
  }
  return path;
}

namespace {

struct BranchSeed {
  int parent;
  int depth;
  Vec3 start;
  Vec3 dir;
  Vec3 u;  // ring basis, u and w span the cross-section
  Vec3 w;
  double length;
  double radius;
};

}  // namespace

Airway build_airway(const AirwaySpec& spec, const DeformationSpec& dspec) {
  spec.validate();
  dspec.validate();

  Airway out;
  const int K = spec.ring_vertices;
  const int R = spec.rings_per_segment;
  const double angle = spec.branch_angle * std::numbers::pi / 180.0;
  const Vec3 axial = dspec.axial_direction.normalized();

  std::vector<BranchSeed> queue{{-1, 0, Vec3::Zero(), Vec3::UnitZ(),
                                 Vec3::UnitX(), Vec3::UnitY(),
                                 spec.root_length, spec.root_radius}};
  auto& verts = out.mesh.insp.vertices;
  auto& faces = out.mesh.insp.faces;
  auto& delta = out.mesh.delta;

  // Breadth-first so branch indices grow with depth.
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const BranchSeed b = queue[qi];
    if (b.radius > b.length) {
      throw SpecError("branch radius exceeds its own length at depth " +
                      std::to_string(b.depth));
    }
    if (b.parent >= 0 && b.radius > queue[b.parent].length) {
      throw SpecError("branch radius exceeds its parent's length at depth " +
                      std::to_string(b.depth));
    }

    CenterlineBranch cb;
    cb.parent = b.parent;
    cb.depth = b.depth;
    cb.radius = b.radius;

    const int base = static_cast<int>(verts.size());
    for (int r = 0; r <= R; ++r) {
      const double frac = static_cast<double>(r) / R;
      const Vec3 centre = b.start + b.dir * (b.length * frac);
      cb.polyline.push_back(centre);
      const double g = b.depth + frac;
      const double weight =
          std::pow((1.0 + g) / (1.0 + spec.tree_depth), dspec.depth_weighting);
      for (int k = 0; k < K; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / K;
        const Vec3 radial = std::cos(phi) * b.u + std::sin(phi) * b.w;
        verts.push_back(centre + b.radius * radial);
        delta.push_back(-dspec.radial_amplitude * weight * radial +
                        dspec.axial_amplitude * weight * axial);
      }
    }
    for (int r = 0; r < R; ++r) {
      for (int k = 0; k < K; ++k) {
        const int k1 = (k + 1) % K;
        const int a = base + r * K + k;
        const int bb = base + (r + 1) * K + k;
        const int c = base + (r + 1) * K + k1;
        const int d = base + r * K + k1;
        faces.push_back({a, bb, c});
        faces.push_back({a, c, d});
      }
    }

    const int index = static_cast<int>(out.centerline.branches.size());
    if (b.parent >= 0) out.centerline.branches[b.parent].children.push_back(index);
    out.centerline.branches.push_back(std::move(cb));

    if (b.depth < spec.tree_depth) {
      const Vec3 end = b.start + b.dir * b.length;
      for (double sign : {1.0, -1.0}) {
        const Eigen::AngleAxisd rot(sign * angle, b.w);
        const Vec3 dir = (rot * b.dir).normalized();
        const Vec3 u_rot = (rot * b.u).normalized();
        // Swapping the ring basis turns the next split plane by 90 degrees.
        queue.push_back({index, b.depth + 1, end, dir, b.w, u_rot,
                         b.length * spec.length_taper,
                         b.radius * spec.radius_taper});
      }
    }
  }
  out.initial_up = Vec3::UnitY();
  out.mesh.validate();
  return out;
}

double breathing_profile(const BreathingProfile& profile, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time must be >= 0");
  profile.validate();
  const double cycle = profile.t_inhale + profile.t_exhale;
  const double tau = std::fmod(t * profile.rate_scale, cycle);
  if (tau < profile.t_inhale) {
    return 0.5 * (1.0 + std::cos(std::numbers::pi * tau / profile.t_inhale));
  }
  return 0.5 * (1.0 - std::cos(std::numbers::pi * (tau - profile.t_inhale) /
                               profile.t_exhale));
}

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

std::vector<TimedPose> centerline_trajectory(const Airway& airway,
                                             const TrajectorySpec& spec,
                                             const Intrinsics& intrinsics) {
  spec.validate();
  const auto leaves = airway.centerline.leaves();
  if (leaves.empty()) throw SpecError("centerline tree is empty");
  std::mt19937_64 rng(spec.endpoint_seed);
  std::uniform_int_distribution<std::size_t> pick(0, leaves.size() - 1);
  const std::vector<Vec3> path = airway.centerline.path_to(leaves[pick(rng)]);

  std::vector<double> cumulative{0.0};
  for (std::size_t i = 1; i < path.size(); ++i) {
    cumulative.push_back(cumulative.back() + (path[i] - path[i - 1]).norm());
  }
  const double length = cumulative.back();
  const double count_real = std::floor(length * spec.fps / spec.speed);
  if (count_real < 1.0) {
    throw TrajectoryTooShortError("centerline path of " +
                                  std::to_string(length) +
                                  " mm is shorter than one frame step");
  }
  const auto count = static_cast<std::size_t>(count_real) + 1;
  const double step = spec.speed / spec.fps;

  std::vector<TimedPose> poses;
  poses.reserve(count);
  Vec3 up = airway.initial_up;
  Vec3 prev_tangent = Vec3::Zero();
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = std::min(static_cast<double>(k) * step, length);
    while (seg + 2 < path.size() && cumulative[seg + 1] <= s) ++seg;
    const double seg_len = cumulative[seg + 1] - cumulative[seg];
    const double f = seg_len > 0.0 ? (s - cumulative[seg]) / seg_len : 0.0;
    const Vec3 centre = path[seg] + f * (path[seg + 1] - path[seg]);
    const Vec3 tangent = (path[seg + 1] - path[seg]).normalized();
    if (k > 0) {
      up = Eigen::Quaterniond::FromTwoVectors(prev_tangent, tangent) * up;
    }
    up = (up - up.dot(tangent) * tangent).normalized();
    prev_tangent = tangent;
    poses.push_back({static_cast<double>(k) / spec.fps, s,
                     Camera::look_along(intrinsics, centre, tangent, up)});
  }
  return poses;
}

std::size_t ping_pong_index(std::size_t frame, std::size_t pass_length) {
  if (pass_length == 0) throw DomainError("empty trajectory");
  if (pass_length == 1) return 0;
  const std::size_t period = 2 * (pass_length - 1);
  const std::size_t m = frame % period;
  return m < pass_length ? m : period - m;
}

// ---------------------------------------------------------------------------
// Ground-truth ray caster
// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double lattice_value(std::int64_t ix, std::int64_t iy, std::int64_t iz,
                     std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(ix));
  h = splitmix64(h ^ static_cast<std::uint64_t>(iy));
  h = splitmix64(h ^ static_cast<std::uint64_t>(iz));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double fade(double t) { return t * t * (3.0 - 2.0 * t); }

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void grow(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void grow(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
};

struct BvhNode {
  Aabb box;
  int left = -1;   // child index, or -1 for a leaf
  int right = -1;
  int begin = 0;   // leaf range into Bvh::order
  int end = 0;
};

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int face = -1;
  double u = 0.0;
  double v = 0.0;
};

class Bvh {
 public:
  Bvh(const std::vector<Vec3>& vertices, const std::vector<Face>& faces)
      : vertices_(vertices), faces_(faces) {
    order_.resize(faces.size());
    centroids_.resize(faces.size());
    for (std::size_t i = 0; i < faces.size(); ++i) {
      order_[i] = static_cast<int>(i);
      centroids_[i] = (vertices[faces[i][0]] + vertices[faces[i][1]] +
                       vertices[faces[i][2]]) / 3.0;
    }
    if (!faces.empty()) build(0, static_cast<int>(faces.size()));
  }

  /// Nearest hit with t >= t_min; ties keep the lower face index.
  Hit intersect(const Vec3& origin, const Vec3& dir, double t_min) const {
    Hit best;
    if (nodes_.empty()) return best;
    const Vec3 inv = dir.cwiseInverse();
    int stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const BvhNode& node = nodes_[stack[--top]];
      if (!slab(node.box, origin, inv, t_min, best.t)) continue;
      if (node.left < 0) {
        for (int i = node.begin; i < node.end; ++i) {
          test_triangle(order_[i], origin, dir, t_min, best);
        }
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
    return best;
  }

 private:
  static constexpr int kLeafSize = 4;

  int build(int begin, int end) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Aabb box;
    Aabb cbox;
    for (int i = begin; i < end; ++i) {
      const Face& f = faces_[order_[i]];
      for (int c = 0; c < 3; ++c) box.grow(vertices_[f[c]]);
      cbox.grow(centroids_[order_[i]]);
    }
    nodes_[index].box = box;
    if (end - begin <= kLeafSize) {
      nodes_[index].begin = begin;
      nodes_[index].end = end;
      return index;
    }
    int axis = 0;
    (cbox.hi - cbox.lo).maxCoeff(&axis);
    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](int a, int b) {
                       const double ca = centroids_[a][axis];
                       const double cb = centroids_[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  static bool slab(const Aabb& box, const Vec3& o, const Vec3& inv,
                   double t_min, double t_max) {
    double lo = t_min;
    double hi = t_max;
    for (int a = 0; a < 3; ++a) {
      double t0 = (box.lo[a] - o[a]) * inv[a];
      double t1 = (box.hi[a] - o[a]) * inv[a];
      if (t0 > t1) std::swap(t0, t1);
      // NaN from 0 * inf means the ray lies on the slab plane: keep it.
      if (!(t0 <= hi) && !std::isnan(t0)) return false;
      if (!(t1 >= lo) && !std::isnan(t1)) return false;
      if (t0 > lo) lo = t0;
      if (t1 < hi) hi = t1;
    }
    return lo <= hi * (1.0 + 1e-12) + 1e-12;
  }

  void test_triangle(int fi, const Vec3& o, const Vec3& d, double t_min,
                     Hit& best) const {
    const Face& f = faces_[fi];
    const Vec3& p0 = vertices_[f[0]];
    const Vec3 e1 = vertices_[f[1]] - p0;
    const Vec3 e2 = vertices_[f[2]] - p0;
    const Vec3 pv = d.cross(e2);
    const double det = e1.dot(pv);
    if (std::abs(det) < 1e-15) return;
    const double inv_det = 1.0 / det;
    const Vec3 tv = o - p0;
    const double u = tv.dot(pv) * inv_det;
    // Slack on the edges so rays through a shared edge cannot slip between
    // both neighbours.
    constexpr double kEdgeSlack = 1e-9;
    if (u < -kEdgeSlack || u > 1.0 + kEdgeSlack) return;
    const Vec3 qv = tv.cross(e1);
    const double v = d.dot(qv) * inv_det;
    if (v < -kEdgeSlack || u + v > 1.0 + kEdgeSlack) return;
    const double t = e2.dot(qv) * inv_det;
    if (t < t_min) return;
    if (t < best.t || (t == best.t && fi < best.face)) best = {t, fi, u, v};
  }

  const std::vector<Vec3>& vertices_;
  const std::vector<Face>& faces_;
  std::vector<int> order_;
  std::vector<Vec3> centroids_;
  std::vector<BvhNode> nodes_;
};

double albedo_noise(const Vec3& p, const SceneMaterial& m) {
  const Vec3 q = p / m.noise_cell;
  const double coarse = value_noise(q, m.rng_seed);
  const double fine = value_noise(2.0 * q, m.rng_seed + 1);
  return 0.65 * coarse + 0.35 * fine;
}

}  // namespace

double value_noise(const Vec3& p, std::uint64_t seed) {
  const Vec3 fl(std::floor(p.x()), std::floor(p.y()), std::floor(p.z()));
  const auto ix = static_cast<std::int64_t>(fl.x());
  const auto iy = static_cast<std::int64_t>(fl.y());
  const auto iz = static_cast<std::int64_t>(fl.z());
  const double fx = fade(p.x() - fl.x());
  const double fy = fade(p.y() - fl.y());
  const double fz = fade(p.z() - fl.z());
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy) *
                     (dz ? fz : 1.0 - fz);
    acc += w * lattice_value(ix + dx, iy + dy, iz + dz, seed);
  }
  return acc;
}

GroundTruthFrame render_ground_truth(const std::vector<Vec3>& vertices,
                                     const std::vector<Face>& faces,
                                     const Camera& camera,
                                     const SceneMaterial& material,
                                     double exposure_gain,
                                     const std::vector<Vec3>& texture_vertices) {
  camera.validate();
  material.validate();
  if (!(exposure_gain > 0.0)) throw DomainError("exposure gain must be > 0");
  if (!texture_vertices.empty() && texture_vertices.size() != vertices.size()) {
    throw ShapeError("texture vertices must match the mesh vertices");
  }
  for (const Face& f : faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= static_cast<int>(vertices.size())) {
        throw IndexError("face references a missing vertex");
      }
    }
  }
  const auto& tex = texture_vertices.empty() ? vertices : texture_vertices;

  const Intrinsics& k = camera.k;
  GroundTruthFrame out;
  out.rgb = Image(k.width, k.height, 3);
  out.depth = Image(k.width, k.height, 1);
  const Bvh bvh(vertices, faces);
  const Mat3 rt = camera.rotation().transpose();
  const Vec3 origin = camera.center();
  const double inf = std::numeric_limits<double>::infinity();

  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      // Camera-space z of the direction is 1, so the hit parameter is depth.
      const Vec3 dir = rt * Vec3((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Hit hit = bvh.intersect(origin, dir, kNearPlane);
      if (hit.face < 0) {
        out.depth.at(x, y, 0) = inf;
        continue;
      }
      out.depth.at(x, y, 0) = hit.t;

      const Face& f = faces[hit.face];
      const Vec3 p = origin + hit.t * dir;
      Vec3 n = (vertices[f[1]] - vertices[f[0]])
                   .cross(vertices[f[2]] - vertices[f[0]])
                   .normalized();
      const Vec3 to_light = origin - p;
      const double dist = to_light.norm();
      const Vec3 l = to_light / dist;
      if (n.dot(l) < 0.0) n = -n;
      const double n_dot_l = std::max(n.dot(l), 0.0);
      const double irradiance = material.light_intensity / (dist * dist);
      // Light and eye coincide, so the half vector is l.
      const double specular = material.specular_strength * irradiance *
                              std::pow(n_dot_l, material.specular_exponent);
      const Vec3 tp = (1.0 - hit.u - hit.v) * tex[f[0]] + hit.u * tex[f[1]] +
                      hit.v * tex[f[2]];
      const double modulation =
          1.0 + material.albedo_noise_amplitude * albedo_noise(tp, material);
      for (int c = 0; c < 3; ++c) {
        const double albedo = material.base_albedo[c] * modulation;
        const double shade =
            std::clamp(albedo * irradiance * n_dot_l + specular, 0.0, 1.0);
        out.rgb.at(x, y, c) = exposure_gain * shade;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

namespace {

void remove_stale(const fs::path& dir, const char* ext, std::size_t count) {
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path& p = entry.path();
    if (p.extension() != std::string(".") + ext) continue;
    const std::string stem = p.stem().string();
    if (stem.size() < 6 ||
        !std::all_of(stem.begin(), stem.end(), [](char ch) {
          return ch >= '0' && ch <= '9';
        })) {
      continue;
    }
    if (std::stoull(stem) >= count) fs::remove(p);
  }
}

}  // namespace

DatasetSummary generate_dataset(const SimConfig& config,
                                const fs::path& out_dir) {
  config.breathing.validate();
  config.material.validate();
  config.sequence.validate();

  const Airway airway = build_airway(config.airway, config.deformation);
  const Intrinsics k = Intrinsics::from_fov(
      config.sequence.width, config.sequence.height, config.sequence.hfov_degrees);
  const auto poses = centerline_trajectory(airway, config.trajectory, k);
  const auto frames = static_cast<std::size_t>(config.sequence.frames);

  std::mt19937_64 rng(config.material.rng_seed);
  std::uniform_real_distribution<double> jitter(
      config.material.exposure_jitter_range[0],
      config.material.exposure_jitter_range[1]);
  std::vector<double> gains(frames);
  for (double& g : gains) g = jitter(rng);

  std::error_code ec;
  fs::create_directories(out_dir / "frames", ec);
  fs::create_directories(out_dir / "depth", ec);
  if (!fs::is_directory(out_dir / "frames") || !fs::is_directory(out_dir / "depth")) {
    throw IoError("cannot create dataset directories under " + out_dir.string());
  }
  remove_stale(out_dir / "frames", "ppm", frames);
  remove_stale(out_dir / "depth", "f32", frames);

  const BreathingMesh& bm = airway.mesh;
  const TriMesh exp{bm.expiration_vertices(), bm.insp.faces};
  write_obj(out_dir / "mesh_insp.obj", bm.insp);
  write_obj(out_dir / "mesh_exp.obj", exp);

  DatasetMeta meta;
  meta.intrinsics = k;
  meta.fps = config.trajectory.fps;
  std::vector<Vec3> verts(bm.insp.vertices.size());
  for (std::size_t f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / config.trajectory.fps;
    const double alpha = breathing_profile(config.breathing, t);
    for (std::size_t i = 0; i < verts.size(); ++i) {
      verts[i] = (1.0 - alpha) * bm.insp.vertices[i] + alpha * exp.vertices[i];
    }
    const Camera& cam = poses[ping_pong_index(f, poses.size())].camera;
    const GroundTruthFrame gt = render_ground_truth(
        verts, bm.insp.faces, cam, config.material, gains[f], bm.insp.vertices);
    write_ppm(Dataset::rgb_path(out_dir, f), gt.rgb);
    write_f32(Dataset::depth_path(out_dir, f), gt.depth);
    meta.frames.push_back({static_cast<int>(f), cam.pose, alpha, gains[f]});
  }
  write_meta_json(out_dir / "meta.json", meta);

  DatasetSummary summary;
  summary.frame_count = frames;
  for (const Vec3& d : bm.delta) {
    summary.max_displacement = std::max(summary.max_displacement, d.norm());
  }
  return summary;
}

}  // namespace airsplat
