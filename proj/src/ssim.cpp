#include "airsplat/ssim.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "airsplat/error.hpp"

namespace airsplat {

namespace {

constexpr int kRadius = kSsimWindow / 2;

std::array<double, kSsimWindow> window_weights() {
  std::array<double, kSsimWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kRadius;
    w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

const std::array<double, kSsimWindow> kWeights = window_weights();

// Plane of one channel, row-major.
struct Plane {
  int w, h;
  std::vector<double> v;
};

Plane extract(const Image& img, int c) {
  Plane p{img.width, img.height, std::vector<double>(img.pixel_count())};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) p.v[y * img.width + x] = img.at(x, y, c);
  return p;
}

// Valid-mode separable Gaussian filter: output is (w-10) x (h-10).
Plane filter_valid(const Plane& in) {
  const int ow = in.w - 2 * kRadius, oh = in.h - 2 * kRadius;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * in.h);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += kWeights[k] * in.v[y * in.w + x + k];
      tmp[y * ow + x] = s;
    }
  Plane out{ow, oh, std::vector<double>(static_cast<std::size_t>(ow) * oh)};
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += kWeights[k] * tmp[(y + k) * ow + x];
      out.v[y * ow + x] = s;
    }
  return out;
}

// Adjoint of filter_valid: scatters a (w-10) x (h-10) map back to w x h.
Plane filter_adjoint(const Plane& in, int w, int h) {
  std::vector<double> tmp(static_cast<std::size_t>(in.w) * h, 0.0);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x)
      for (int k = 0; k < kSsimWindow; ++k)
        tmp[(y + k) * in.w + x] += kWeights[k] * in.v[y * in.w + x];
  Plane out{w, h, std::vector<double>(static_cast<std::size_t>(w) * h, 0.0)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < in.w; ++x)
      for (int k = 0; k < kSsimWindow; ++k)
        out.v[y * w + x + k] += kWeights[k] * tmp[y * in.w + x];
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane p = a;
  for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] *= b.v[i];
  return p;
}

// Sum of the SSIM map of one channel; fills per-pixel gradient if requested.
double channel_ssim(const Plane& a, const Plane& b, double grad_scale,
                    Plane* grad) {
  const Plane ma = filter_valid(a);
  const Plane mb = filter_valid(b);
  const Plane maa = filter_valid(product(a, a));
  const Plane mbb = filter_valid(product(b, b));
  const Plane mab = filter_valid(product(a, b));
  const std::size_t n = ma.v.size();
  Plane g_m{ma.w, ma.h, std::vector<double>(grad ? n : 0)};
  Plane g_mm = g_m, g_mab = g_m;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double mx = ma.v[i], my = mb.v[i];
    const double vx = maa.v[i] - mx * mx;
    const double vy = mbb.v[i] - my * my;
    const double cxy = mab.v[i] - mx * my;
    const double a1 = 2.0 * mx * my + kSsimC1;
    const double a2 = 2.0 * cxy + kSsimC2;
    const double b1 = mx * mx + my * my + kSsimC1;
    const double b2 = vx + vy + kSsimC2;
    const double s = (a1 * a2) / (b1 * b2);
    total += s;
    if (grad) {
      const double inv = 1.0 / (b1 * b2);
      // Derivatives with respect to the raw window moments of `a`.
      const double d_mx = (2.0 * my * a2 + a1 * (-2.0 * my)) * inv -
                          s * (2.0 * mx / b1 - 2.0 * mx / b2);
      g_m.v[i] = grad_scale * d_mx;
      g_mm.v[i] = grad_scale * (-s / b2);
      g_mab.v[i] = grad_scale * (2.0 * a1 * inv);
    }
  }
  if (grad) {
    const Plane s_m = filter_adjoint(g_m, a.w, a.h);
    const Plane s_mm = filter_adjoint(g_mm, a.w, a.h);
    const Plane s_mab = filter_adjoint(g_mab, a.w, a.h);
    grad->w = a.w;
    grad->h = a.h;
    grad->v.resize(a.v.size());
    for (std::size_t i = 0; i < a.v.size(); ++i) {
      grad->v[i] = s_m.v[i] + 2.0 * a.v[i] * s_mm.v[i] + b.v[i] * s_mab.v[i];
    }
  }
  return total;
}

double ssim_impl(const Image& a, const Image& b, Image* grad_a) {
  require_same_shape(a, b, "ssim");
  if (a.width < kSsimWindow || a.height < kSsimWindow) {
    throw ShapeError("image smaller than the SSIM window");
  }
  const double windows = static_cast<double>(a.width - 2 * kRadius) *
                         (a.height - 2 * kRadius) * a.channels;
  if (grad_a) *grad_a = Image(a.width, a.height, a.channels);
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    Plane g;
    total += channel_ssim(extract(a, c), extract(b, c), 1.0 / windows,
                          grad_a ? &g : nullptr);
    if (grad_a) {
      for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) grad_a->at(x, y, c) = g.v[y * a.width + x];
    }
  }
  return total / windows;
}

}  // namespace

double ssim(const Image& a, const Image& b) { return ssim_impl(a, b, nullptr); }

double ssim_with_grad(const Image& a, const Image& b, Image& grad_a) {
  return ssim_impl(a, b, &grad_a);
}

}  // namespace airsplat
