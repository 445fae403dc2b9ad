#include "airsplat/raster.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <cmath>
#include <limits>
#include <thread>

#include "airsplat/error.hpp"

namespace airsplat {

namespace {

using Mat23 = Eigen::Matrix<double, 2, 3>;

struct CameraData {
  Mat3 w;
  Vec3 t;
  Vec3 center;
  double fx, fy, cx, cy;
  int width, height;

  explicit CameraData(const Camera& cam)
      : w(cam.rotation()), t(cam.translation()), center(cam.center()),
        fx(cam.k.fx), fy(cam.k.fy), cx(cam.k.cx), cy(cam.k.cy),
        width(cam.k.width), height(cam.k.height) {}
};

// Screen-space quantities of one 3-D Gaussian plus the intermediates the
// backward pass needs.
struct Projection {
  Vec3 p;      // camera-space centre
  Mat3 cov_cam;
  Mat23 jac;
  Mat2 cov2d;
  Mat2 conic;
  Vec2 mean;
};

bool project_impl(const Vec3& mu, const Mat3& cov, const CameraData& cam,
                  Projection& out) {
  out.p = cam.w * mu + cam.t;
  const double x = out.p.x(), y = out.p.y(), z = out.p.z();
  if (!(z > kNearPlane)) return false;
  out.mean = Vec2(cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy);
  const double gx = kGuardBand * cam.width;
  const double gy = kGuardBand * cam.height;
  if (out.mean.x() < -gx || out.mean.x() > cam.width - 1 + gx ||
      out.mean.y() < -gy || out.mean.y() > cam.height - 1 + gy) {
    return false;
  }
  const double iz = 1.0 / z;
  out.jac << cam.fx * iz, 0.0, -cam.fx * x * iz * iz,  //
      0.0, cam.fy * iz, -cam.fy * y * iz * iz;
  out.cov_cam = cam.w * cov * cam.w.transpose();
  out.cov2d = out.jac * out.cov_cam * out.jac.transpose();
  out.cov2d(0, 0) += kCovarianceFloor;
  out.cov2d(1, 1) += kCovarianceFloor;
  out.cov2d(0, 1) = out.cov2d(1, 0) = 0.5 * (out.cov2d(0, 1) + out.cov2d(1, 0));
  const double det = out.cov2d.determinant();
  if (!(det > 0.0)) return false;
  out.conic << out.cov2d(1, 1) / det, -out.cov2d(0, 1) / det,
      -out.cov2d(1, 0) / det, out.cov2d(0, 0) / det;
  return true;
}

// Everything derived from one anchored Gaussian for a given mesh and camera.
struct Resolved {
  std::array<double, 3> lam;
  Vec3 mu;
  Vec3 e1, e2, cross;
  double cross_norm, e1_norm;
  Mat3 rot;     // columns tangent, bitangent, normal
  Vec3 var;     // diagonal variances in the face frame
  Mat3 cov;
  Projection proj;
  Vec3 view;    // unnormalised camera-centre-to-mu
  double view_norm;
  std::array<double, kShBasis> basis;
  std::array<double, 3> raw_color;  // before clamping
  std::array<double, 3> color;
};

bool resolve(const AnchoredGaussian& g, const std::vector<Vec3>& vertices,
             const std::vector<Face>& faces, double normal_scale,
             const CameraData& cam, Resolved& r) {
  const Face& f = faces[g.face_id];
  const Vec3& v0 = vertices[f[0]];
  const Vec3& v1 = vertices[f[1]];
  const Vec3& v2 = vertices[f[2]];
  r.lam = softmax3(g.bary_logits);
  r.mu = r.lam[0] * v0 + r.lam[1] * v1 + r.lam[2] * v2;
  r.e1 = v1 - v0;
  r.e2 = v2 - v0;
  r.cross = r.e1.cross(r.e2);
  r.cross_norm = r.cross.norm();
  r.e1_norm = r.e1.norm();
  if (!(r.cross_norm > 0.0) || !(r.e1_norm > 0.0)) return false;
  const Vec3 n = r.cross / r.cross_norm;
  const Vec3 t = r.e1 / r.e1_norm;
  r.rot.col(0) = t;
  r.rot.col(1) = n.cross(t);
  r.rot.col(2) = n;
  r.var = Vec3(std::exp(2.0 * g.log_scales[0]), std::exp(2.0 * g.log_scales[1]),
               normal_scale * normal_scale);
  r.cov = r.rot * r.var.asDiagonal() * r.rot.transpose();
  if (!project_impl(r.mu, r.cov, cam, r.proj)) return false;
  r.view = r.mu - cam.center;
  r.view_norm = r.view.norm();
  const Vec3 dir = r.view_norm > 0.0 ? Vec3(r.view / r.view_norm) : Vec3(0, 0, 1);
  r.basis = sh_basis(dir);
  for (int c = 0; c < 3; ++c) {
    double v = 0.5;
    for (int k = 0; k < kShBasis; ++k) v += g.sh[k * 3 + c] * r.basis[k];
    r.raw_color[c] = v;
    r.color[c] = std::clamp(v, 0.0, 1.0);
  }
  return true;
}

struct Splat {
  int gaussian;
  double mx, my;
  double ca, cb, cc;  // conic [[ca, cb], [cb, cc]]
  double depth;
  double opacity;
  std::array<double, 3> color;
  int x0, x1, y0, y1;  // inclusive pixel bounds, clipped to the image
  Vec3 normal;         // camera space
  double plane;        // normal . centre
  double z_lo, z_hi;   // depth range of the disc's kernel support
};

struct Binned {
  std::vector<Resolved> resolved;  // per Gaussian (valid where visible)
  std::vector<Splat> splats;       // visible, sorted front to back
  int band_rows = 16;
  int bands = 0;
  std::vector<std::vector<int>> band_lists;  // indices into splats
};

Binned bin(const GaussianCloud& cloud, const std::vector<Vec3>& vertices,
           const std::vector<Face>& faces, const CameraData& cam,
           const RenderSettings& settings, bool keep_resolved) {
  cloud.check_anchoring(faces.size());
  Binned b;
  b.band_rows = std::max(1, settings.band_rows);
  b.bands = (cam.height + b.band_rows - 1) / b.band_rows;
  b.band_lists.resize(b.bands);
  if (keep_resolved) b.resolved.resize(cloud.size());
  Resolved scratch;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const AnchoredGaussian& g = cloud.gaussians[i];
    Resolved& r = keep_resolved ? b.resolved[i] : scratch;
    if (!resolve(g, vertices, faces, cloud.normal_scale, cam, r)) continue;
    const Projection& pr = r.proj;
    const double margin = 1e-9;
    const double rx = std::sqrt(kMaxMahalanobisSq * pr.cov2d(0, 0)) + margin;
    const double ry = std::sqrt(kMaxMahalanobisSq * pr.cov2d(1, 1)) + margin;
    Splat s;
    s.gaussian = static_cast<int>(i);
    s.mx = pr.mean.x();
    s.my = pr.mean.y();
    s.ca = pr.conic(0, 0);
    s.cb = pr.conic(0, 1);
    s.cc = pr.conic(1, 1);
    s.depth = pr.p.z();
    s.normal = cam.w * r.rot.col(2);
    s.plane = s.normal.dot(pr.p);
    const double reach = std::sqrt(kMaxMahalanobisSq) *
                         std::exp(std::max(g.log_scales[0], g.log_scales[1]));
    s.z_lo = std::max(kNearPlane, s.depth - reach);
    s.z_hi = s.depth + reach;
    s.opacity = g.opacity;
    s.color = r.color;
    s.x0 = std::max(0, static_cast<int>(std::ceil(s.mx - rx)));
    s.x1 = std::min(cam.width - 1, static_cast<int>(std::floor(s.mx + rx)));
    s.y0 = std::max(0, static_cast<int>(std::ceil(s.my - ry)));
    s.y1 = std::min(cam.height - 1, static_cast<int>(std::floor(s.my + ry)));
    if (s.x0 > s.x1 || s.y0 > s.y1) continue;
    b.splats.push_back(s);
  }
  std::sort(b.splats.begin(), b.splats.end(),
            [](const Splat& a, const Splat& c) {
              if (a.depth != c.depth) return a.depth < c.depth;
              return a.gaussian < c.gaussian;
            });
  for (std::size_t si = 0; si < b.splats.size(); ++si) {
    const Splat& s = b.splats[si];
    for (int band = s.y0 / b.band_rows; band <= s.y1 / b.band_rows; ++band) {
      b.band_lists[band].push_back(static_cast<int>(si));
    }
  }
  return b;
}

template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// exp(x) for x in [-16, 0] (the kernel's range), accurate to a few ulp.
inline double kernel_exp(double x) {
  constexpr double kLog2e = 1.4426950408889634;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  const double k = std::nearbyint(x * kLog2e);
  const double r = (x - k * kLn2Hi) - k * kLn2Lo;
  double p = 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  const auto bits = static_cast<std::uint64_t>(static_cast<std::int64_t>(k) + 1023) << 52;
  return p * std::bit_cast<double>(bits);
}

// Columns of row `py` that may lie inside the splat's kernel support.
inline bool row_span(const Splat& s, int py, int& x0, int& x1) {
  const double dy = py - s.my;
  // ca dx^2 + 2 cb dy dx + (cc dy^2 - Q) <= 0
  const double half_b = s.cb * dy;
  const double disc = half_b * half_b - s.ca * (s.cc * dy * dy - kMaxMahalanobisSq);
  if (disc < 0.0) return false;
  const double root = std::sqrt(disc);
  const double margin = 1e-6;
  x0 = std::max(s.x0, static_cast<int>(std::ceil(s.mx + (-half_b - root) / s.ca - margin)));
  x1 = std::min(s.x1, static_cast<int>(std::floor(s.mx + (-half_b + root) / s.ca + margin)));
  return x0 <= x1;
}

inline double mahalanobis_sq(const Splat& s, double dx, double dy) {
  return s.ca * dx * dx + 2.0 * s.cb * dx * dy + s.cc * dy * dy;
}

// Depth at which the pixel ray meets the splat's disc plane.
inline double surface_depth(const Splat& s, const CameraData& cam, int px, int py) {
  const double denom = s.normal.x() * (px - cam.cx) / cam.fx +
                       s.normal.y() * (py - cam.cy) / cam.fy + s.normal.z();
  if (!(std::abs(denom) > 1e-12)) return s.depth;
  return std::clamp(s.plane / denom, s.z_lo, s.z_hi);
}

}  // namespace

std::optional<ProjectedGaussian> project_gaussian(const Vec3& mu,
                                                  const Mat3& cov,
                                                  const Camera& camera) {
  Projection pr;
  if (!project_impl(mu, cov, CameraData(camera), pr)) return std::nullopt;
  return ProjectedGaussian{pr.mean, pr.cov2d, pr.p.z()};
}

namespace {

// Every (pixel, splat) pair composited in one band, in compositing order.
struct BandHit {
  int pixel;     // index within the band
  int list_pos;  // position in the band list
  std::int32_t x, y;
  double alpha;
  double trans;  // transmittance in front of the splat
};

// Splat-major front-to-back compositing, one band of rows at a time. Per
// pixel the arithmetic and its order match a per-pixel loop over the
// depth-sorted splats.
RenderOutput forward_binned(const Binned& b, const CameraData& cam,
                            const RenderSettings& settings,
                            std::vector<std::vector<BandHit>>* record = nullptr) {
  RenderOutput out{Image(cam.width, cam.height, 3),
                   Image(cam.width, cam.height, 1),
                   Image(cam.width, cam.height, 1)};
  if (record) {
    record->resize(b.bands);
    for (auto& r : *record) r.clear();
  }
  parallel_for(b.bands, settings.workers, [&](int band) {
    const int row0 = band * b.band_rows;
    const int row1 = std::min(cam.height, row0 + b.band_rows);
    const std::size_t n_px = static_cast<std::size_t>(row1 - row0) * cam.width;
    std::vector<double> trans(n_px, 1.0);
    std::vector<double> acc(n_px * 4, 0.0);  // r, g, b, depth
    // Per row, next[i] leads to the first pixel at or after i that is still
    // compositing; each row ends in a sentinel that never terminates.
    const int stride = cam.width + 1;
    std::vector<int> next(static_cast<std::size_t>(row1 - row0) * stride);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = static_cast<int>(i);
    auto find = [&next](int i) {
      while (next[i] != i) {
        next[i] = next[next[i]];
        i = next[i];
      }
      return i;
    };
    std::vector<BandHit>* hits = record ? &(*record)[band] : nullptr;
    const auto& list = b.band_lists[band];
    for (int pos = 0; pos < static_cast<int>(list.size()); ++pos) {
      const Splat& s = b.splats[list[pos]];
      const int ya = std::max(s.y0, row0);
      const int yb = std::min(s.y1, row1 - 1);
      for (int py = ya; py <= yb; ++py) {
        int xa, xb;
        if (!row_span(s, py, xa, xb)) continue;
        const double dy = py - s.my;
        const int row_base = (py - row0) * cam.width;
        const int link_base = (py - row0) * stride;
        for (int li = find(link_base + xa); li - link_base <= xb;
             li = find(li + 1)) {
          const int px = li - link_base;
          const int p = row_base + px;
          const double q = mahalanobis_sq(s, px - s.mx, dy);
          if (q > kMaxMahalanobisSq) continue;
          const double a = s.opacity * kernel_exp(-0.5 * q);
          const double t = trans[p];
          const double w = a * t;
          double* ac = &acc[static_cast<std::size_t>(p) * 4];
          for (int c = 0; c < 3; ++c) ac[c] += s.color[c] * w;
          ac[3] += surface_depth(s, cam, px, py) * w;
          if (hits) hits->push_back({p, pos, px, py, a, t});
          trans[p] = t * (1.0 - a);
          if (trans[p] < kMinTransmittance) next[li] = li + 1;
        }
      }
    }
    for (std::size_t p = 0; p < n_px; ++p) {
      const int px = static_cast<int>(p % cam.width);
      const int py = row0 + static_cast<int>(p / cam.width);
      const double alpha = 1.0 - trans[p];
      for (int c = 0; c < 3; ++c) out.rgb.at(px, py, c) = acc[p * 4 + c];
      out.alpha.at(px, py) = alpha;
      out.depth.at(px, py) = alpha >= kMinDepthAlpha ? acc[p * 4 + 3] / alpha : 0.0;
    }
  });
  return out;
}

}  // namespace

RenderOutput render(const GaussianCloud& cloud,
                    const std::vector<Vec3>& vertices,
                    const std::vector<Face>& faces, const Camera& camera,
                    const RenderSettings& settings) {
  const CameraData cam(camera);
  return forward_binned(bin(cloud, vertices, faces, cam, settings, false), cam,
                        settings);
}

namespace {

RenderGradients backward_binned(const Binned& b, const GaussianCloud& cloud,
                                const std::vector<Vec3>& vertices,
                                const std::vector<Face>& faces,
                                const CameraData& cam,
                                const Image& loss_grad_rgb,
                                const RenderSettings& settings,
                                const std::vector<std::vector<BandHit>>& band_hits) {
  if (loss_grad_rgb.width != cam.width || loss_grad_rgb.height != cam.height ||
      loss_grad_rgb.channels != 3) {
    throw ShapeError("loss gradient image does not match the camera");
  }

  // Screen-space gradients per band-list entry, reduced in band order below
  // so the result does not depend on scheduling.
  constexpr int kG = 8;  // mean x, mean y, conic a, b, c, colour r, g, b
  std::vector<std::vector<double>> band_grads(b.bands);
  parallel_for(b.bands, settings.workers, [&](int band) {
    const auto& list = b.band_lists[band];
    auto& grads = band_grads[band];
    grads.assign(list.size() * kG, 0.0);
    if (list.empty()) return;
    const int row0 = band * b.band_rows;
    const int row1 = std::min(cam.height, row0 + b.band_rows);
    const std::size_t n_px = static_cast<std::size_t>(row1 - row0) * cam.width;
    // behind: colour composited behind the current splat, normalised by the
    // transmittance just after it. Hits are replayed back to front.
    std::vector<double> behind(n_px * 3, 0.0);
    const double* band_grad = &loss_grad_rgb.data[loss_grad_rgb.index(0, row0)];
    const auto& hits = band_hits[band];
    for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
      const double* g = band_grad + static_cast<std::size_t>(it->pixel) * 3;
      if (g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0) continue;
      const int px = it->x;
      const int py = it->y;
      const Splat& s = b.splats[list[it->list_pos]];
      double* gr = &grads[static_cast<std::size_t>(it->list_pos) * kG];
      double* bh = &behind[static_cast<std::size_t>(it->pixel) * 3];
      double d_alpha = 0.0;
      for (int c = 0; c < 3; ++c) {
        d_alpha += g[c] * it->trans * (s.color[c] - bh[c]);
        gr[5 + c] += g[c] * it->alpha * it->trans;
        bh[c] = s.color[c] * it->alpha + (1.0 - it->alpha) * bh[c];
      }
      // alpha = o * exp(-q / 2)
      const double d_q = -0.5 * it->alpha * d_alpha;
      const double dx = px - s.mx, dy = py - s.my;
      gr[0] += -d_q * 2.0 * (s.ca * dx + s.cb * dy);
      gr[1] += -d_q * 2.0 * (s.cb * dx + s.cc * dy);
      gr[2] += d_q * dx * dx;
      gr[3] += d_q * 2.0 * dx * dy;
      gr[4] += d_q * dy * dy;
    }
  });

  std::vector<double> splat_grads(b.splats.size() * kG, 0.0);
  for (int band = 0; band < b.bands; ++band) {
    const auto& list = b.band_lists[band];
    const auto& grads = band_grads[band];
    for (std::size_t pos = 0; pos < list.size(); ++pos) {
      double* dst = &splat_grads[static_cast<std::size_t>(list[pos]) * kG];
      for (int k = 0; k < kG; ++k) dst[k] += grads[pos * kG + k];
    }
  }
  // Splat index for each Gaussian, so the chain rule runs in Gaussian order.
  std::vector<int> splat_of(cloud.size(), -1);
  for (std::size_t si = 0; si < b.splats.size(); ++si) {
    splat_of[b.splats[si].gaussian] = static_cast<int>(si);
  }

  RenderGradients out;
  out.bary_logits.assign(cloud.size(), {0.0, 0.0, 0.0});
  out.log_scales.assign(cloud.size(), {0.0, 0.0});
  out.sh.assign(cloud.size(), ShCoeffs{});
  out.vertices.assign(vertices.size(), Vec3::Zero());

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (splat_of[i] < 0) continue;
    const double* gs = &splat_grads[static_cast<std::size_t>(splat_of[i]) * kG];
    const AnchoredGaussian& g = cloud.gaussians[i];
    const Resolved& r = b.resolved[i];
    const Projection& pr = r.proj;

    // Colour: SH coefficients and the view direction.
    Vec3 g_dir = Vec3::Zero();
    const Vec3 dir = r.view_norm > 0.0 ? Vec3(r.view / r.view_norm) : Vec3(0, 0, 1);
    for (int c = 0; c < 3; ++c) {
      if (r.raw_color[c] < 0.0 || r.raw_color[c] > 1.0) continue;
      const double gc = gs[5 + c];
      for (int k = 0; k < kShBasis; ++k) out.sh[i][k * 3 + c] = gc * r.basis[k];
      // d basis / d dir for (-y, z, -x) scaled by C1
      g_dir.x() += gc * (-kShC1) * g.sh[3 * 3 + c];
      g_dir.y() += gc * (-kShC1) * g.sh[1 * 3 + c];
      g_dir.z() += gc * kShC1 * g.sh[2 * 3 + c];
    }
    Vec3 g_mu = Vec3::Zero();
    if (r.view_norm > 0.0) {
      g_mu += (g_dir - dir * dir.dot(g_dir)) / r.view_norm;
    }

    // Conic -> 2-D covariance.
    Mat2 g_conic;
    g_conic << gs[2], 0.5 * gs[3], 0.5 * gs[3], gs[4];
    const Mat2 g_cov2d = -pr.conic * g_conic * pr.conic;
    // 2-D covariance -> camera covariance and Jacobian.
    const Mat3 g_cov_cam = pr.jac.transpose() * g_cov2d * pr.jac;
    const Mat23 g_jac = 2.0 * g_cov2d * pr.jac * pr.cov_cam;

    const double x = pr.p.x(), y = pr.p.y(), z = pr.p.z();
    const double iz = 1.0 / z, iz2 = iz * iz, iz3 = iz2 * iz;
    Vec3 g_p = Vec3::Zero();
    g_p.x() += gs[0] * cam.fx * iz;
    g_p.y() += gs[1] * cam.fy * iz;
    g_p.z() += -gs[0] * cam.fx * x * iz2 - gs[1] * cam.fy * y * iz2;
    g_p.x() += g_jac(0, 2) * (-cam.fx * iz2);
    g_p.y() += g_jac(1, 2) * (-cam.fy * iz2);
    g_p.z() += g_jac(0, 0) * (-cam.fx * iz2) + g_jac(0, 2) * (2.0 * cam.fx * x * iz3) +
               g_jac(1, 1) * (-cam.fy * iz2) + g_jac(1, 2) * (2.0 * cam.fy * y * iz3);
    g_mu += cam.w.transpose() * g_p;

    // World covariance -> frame rotation and scales.
    const Mat3 g_cov = cam.w.transpose() * g_cov_cam * cam.w;
    const Mat3 g_rot = 2.0 * g_cov * r.rot * r.var.asDiagonal();
    const Mat3 rgr = r.rot.transpose() * g_cov * r.rot;
    out.log_scales[i][0] = rgr(0, 0) * 2.0 * r.var.x();
    out.log_scales[i][1] = rgr(1, 1) * 2.0 * r.var.y();

    const Vec3 t = r.rot.col(0);
    const Vec3 n = r.rot.col(2);
    Vec3 g_t = g_rot.col(0);
    Vec3 g_n = g_rot.col(2);
    const Vec3 g_bt = g_rot.col(1);
    // bitangent = n x t
    g_n += t.cross(g_bt);
    g_t += g_bt.cross(n);
    const Vec3 g_cross = (g_n - n * n.dot(g_n)) / r.cross_norm;
    Vec3 g_e1 = r.e2.cross(g_cross) + (g_t - t * t.dot(g_t)) / r.e1_norm;
    const Vec3 g_e2 = g_cross.cross(r.e1);

    const Face& f = faces[g.face_id];
    std::array<double, 3> g_lam{};
    for (int j = 0; j < 3; ++j) {
      g_lam[j] = g_mu.dot(vertices[f[j]]);
      out.vertices[f[j]] += r.lam[j] * g_mu;
    }
    out.vertices[f[1]] += g_e1;
    out.vertices[f[2]] += g_e2;
    out.vertices[f[0]] -= g_e1 + g_e2;
    const double dot = r.lam[0] * g_lam[0] + r.lam[1] * g_lam[1] + r.lam[2] * g_lam[2];
    for (int j = 0; j < 3; ++j) out.bary_logits[i][j] = r.lam[j] * (g_lam[j] - dot);
  }
  return out;
}

}  // namespace

RenderGradients render_backward(const GaussianCloud& cloud,
                                const std::vector<Vec3>& vertices,
                                const std::vector<Face>& faces,
                                const Camera& camera,
                                const Image& loss_grad_rgb,
                                const RenderSettings& settings) {
  const CameraData cam(camera);
  const Binned b = bin(cloud, vertices, faces, cam, settings, true);
  // Reused across calls: the hit lists are large and regrow every time.
  thread_local std::vector<std::vector<BandHit>> hits;
  forward_binned(b, cam, settings, &hits);
  return backward_binned(b, cloud, vertices, faces, cam, loss_grad_rgb,
                         settings, hits);
}

RenderOutput render_and_backward(
    const GaussianCloud& cloud, const std::vector<Vec3>& vertices,
    const std::vector<Face>& faces, const Camera& camera,
    const std::function<Image(const RenderOutput&)>& loss_grad,
    RenderGradients& grads, const RenderSettings& settings) {
  const CameraData cam(camera);
  const Binned b = bin(cloud, vertices, faces, cam, settings, true);
  thread_local std::vector<std::vector<BandHit>> hits;
  RenderOutput out = forward_binned(b, cam, settings, &hits);
  grads = backward_binned(b, cloud, vertices, faces, cam, loss_grad(out),
                          settings, hits);
  return out;
}

Image render_mesh_depth(const std::vector<Vec3>& vertices,
                        const std::vector<Face>& faces, const Camera& camera) {
  const CameraData cam(camera);
  Image depth(cam.width, cam.height, 1, std::numeric_limits<double>::infinity());
  std::vector<Vec3> cam_space(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    cam_space[i] = cam.w * vertices[i] + cam.t;
  }

  auto raster_triangle = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec2 pa(cam.fx * a.x() / a.z() + cam.cx, cam.fy * a.y() / a.z() + cam.cy);
    const Vec2 pb(cam.fx * b.x() / b.z() + cam.cx, cam.fy * b.y() / b.z() + cam.cy);
    const Vec2 pc(cam.fx * c.x() / c.z() + cam.cx, cam.fy * c.y() / c.z() + cam.cy);
    const double area = (pb - pa).x() * (pc - pa).y() - (pb - pa).y() * (pc - pa).x();
    if (std::abs(area) < 1e-14) return;
    const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({pa.x(), pb.x(), pc.x()}))));
    const int x1 = std::min(cam.width - 1, static_cast<int>(std::floor(std::max({pa.x(), pb.x(), pc.x()}))));
    const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({pa.y(), pb.y(), pc.y()}))));
    const int y1 = std::min(cam.height - 1, static_cast<int>(std::floor(std::max({pa.y(), pb.y(), pc.y()}))));
    const double inv_area = 1.0 / area;
    for (int py = y0; py <= y1; ++py) {
      for (int px = x0; px <= x1; ++px) {
        const Vec2 p(px, py);
        auto edge = [](const Vec2& u, const Vec2& v, const Vec2& q) {
          return (v - u).x() * (q - u).y() - (v - u).y() * (q - u).x();
        };
        const double wa = edge(pb, pc, p) * inv_area;
        const double wb = edge(pc, pa, p) * inv_area;
        const double wc = edge(pa, pb, p) * inv_area;
        if (wa < 0.0 || wb < 0.0 || wc < 0.0) continue;
        // Perspective-correct: 1/z is affine in screen space.
        const double inv_z = wa / a.z() + wb / b.z() + wc / c.z();
        const double zv = 1.0 / inv_z;
        double& d = depth.at(px, py);
        if (zv < d) d = zv;
      }
    }
  };

  for (const Face& f : faces) {
    const Vec3 tri[3] = {cam_space[f[0]], cam_space[f[1]], cam_space[f[2]]};
    // Clip against the near plane.
    Vec3 poly[4];
    int n = 0;
    for (int e = 0; e < 3; ++e) {
      const Vec3& cur = tri[e];
      const Vec3& nxt = tri[(e + 1) % 3];
      const bool cur_in = cur.z() >= kNearPlane;
      const bool nxt_in = nxt.z() >= kNearPlane;
      if (cur_in) poly[n++] = cur;
      if (cur_in != nxt_in) {
        const double t = (kNearPlane - cur.z()) / (nxt.z() - cur.z());
        poly[n++] = cur + t * (nxt - cur);
      }
    }
    for (int k = 1; k + 1 < n; ++k) raster_triangle(poly[0], poly[k], poly[k + 1]);
  }
  return depth;
}

}  // namespace airsplat
