#pragma once

#include "airsplat/image.hpp"

namespace airsplat {

// SSIM with an 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2,
// averaged over windows that lie fully inside the image.
constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

/// Mean SSIM over all channels and valid windows.
double ssim(const Image& a, const Image& b);

/// Mean SSIM and its gradient with respect to `a`.
double ssim_with_grad(const Image& a, const Image& b, Image& grad_a);

}  // namespace airsplat
