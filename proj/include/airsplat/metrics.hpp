#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "airsplat/dataset.hpp"
#include "airsplat/image.hpp"

namespace airsplat {

constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE), capped at 99 dB when MSE < 1e-12.
double psnr(const Image& a, const Image& b);

/// SSIM of the channel-mean grayscale images.
double ssim_eval(const Image& a, const Image& b);

/// RMSE over pixels that are finite and > 0 in both images.
double depth_rmse(const Image& pred, const Image& gt);

/// Fraction of valid pixels with max(pred/gt, gt/pred) < threshold.
double delta_ratio(const Image& pred, const Image& gt, double threshold = 1.25);

double phase_mae(std::span<const double> pred, std::span<const double> gt);

/// Sample Pearson correlation; throws UndefinedCorrelationError when either
/// sequence is constant.
double pearson_r(std::span<const double> pred, std::span<const double> gt);

struct FrameMetrics {
  std::size_t frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double depth_rmse = 0.0;
  double delta = 0.0;
  double alpha_gt = 0.0;
  double alpha_pred = 0.0;
};

struct EvalReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double depth_rmse = 0.0;
  double delta_125 = 0.0;
  double phase_mae = 0.0;
  double pearson_r = 0.0;
  double contour_rmse = 0.0;
  double contour_matched_fraction = 0.0;  // edges found in both slices
  double target_error = 0.0;
  double total_time = 0.0;
  double seconds_per_frame = 0.0;
  std::vector<FrameMetrics> frames;
};

/// Everything evaluate_run needs from a reconstruction, one entry per frame.
struct RunOutputs {
  std::vector<double> alpha_hat;
  std::vector<Image> rgb;
  std::vector<Image> depth;  // 0 or non-finite where undefined
  double total_time = 0.0;
};

/// Per-frame rendering and depth means, phase metrics over the track, and
/// contour/target errors of the final frame, slicing both meshes with the
/// plane through the final camera centre normal to its optical axis.
/// Pearson r is NaN when either track is constant (frozen-phase runs);
/// contour and target errors are NaN when the two slices share no edge.
EvalReport evaluate_run(const Dataset& dataset, const RunOutputs& outputs);

/// Reads phases.json, renders/ and timing.json written by a reconstruction.
/// Throws CoverageError naming the first missing frame.
RunOutputs load_run_outputs(const std::filesystem::path& run_dir,
                            const Dataset& dataset);

void write_report_json(const std::filesystem::path& path, const EvalReport& report);
void write_frame_csv(const std::filesystem::path& path, const EvalReport& report);

}  // namespace airsplat
