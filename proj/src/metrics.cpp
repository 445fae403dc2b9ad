#include "airsplat/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include <nlohmann/json.hpp>

#include "airsplat/error.hpp"
#include "airsplat/geometry.hpp"
#include "airsplat/image_io.hpp"
#include "airsplat/ssim.hpp"

namespace airsplat {

namespace fs = std::filesystem;

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  if (a.data.empty()) throw ShapeError("psnr: empty images");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.data.size());
  if (mse < 1e-12) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

Image to_gray(const Image& img) {
  Image g(img.width, img.height, 1);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    double s = 0.0;
    for (int c = 0; c < img.channels; ++c) s += img.data[p * img.channels + c];
    g.data[p] = s / img.channels;
  }
  return g;
}

bool valid_depth(double d) { return std::isfinite(d) && d > 0.0; }

template <typename F>
std::size_t for_each_valid(const Image& pred, const Image& gt, F&& f) {
  require_same_shape(pred, gt, "depth metric");
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    if (valid_depth(pred.data[i]) && valid_depth(gt.data[i])) {
      f(pred.data[i], gt.data[i]);
      ++n;
    }
  }
  if (n == 0) throw NoOverlapError("no pixel has valid depth in both images");
  return n;
}

}  // namespace

double ssim_eval(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim_eval");
  return ssim(to_gray(a), to_gray(b));
}

double depth_rmse(const Image& pred, const Image& gt) {
  double sum = 0.0;
  const std::size_t n =
      for_each_valid(pred, gt, [&](double p, double g) { sum += (p - g) * (p - g); });
  return std::sqrt(sum / static_cast<double>(n));
}

double delta_ratio(const Image& pred, const Image& gt, double threshold) {
  std::size_t hits = 0;
  const std::size_t n = for_each_valid(pred, gt, [&](double p, double g) {
    if (std::max(p / g, g / p) < threshold) ++hits;
  });
  return static_cast<double>(hits) / static_cast<double>(n);
}

double phase_mae(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) {
    throw ShapeError("phase sequences differ in length");
  }
  if (pred.empty()) throw ShapeError("phase sequences are empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - gt[i]);
  return sum / static_cast<double>(pred.size());
}

double pearson_r(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) {
    throw ShapeError("phase sequences differ in length");
  }
  if (pred.size() < 2) throw ShapeError("correlation needs at least 2 samples");
  const auto n = static_cast<double>(pred.size());
  double mp = 0.0, mg = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mp += pred[i];
    mg += gt[i];
  }
  mp /= n;
  mg /= n;
  double cov = 0.0, vp = 0.0, vg = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double a = pred[i] - mp;
    const double b = gt[i] - mg;
    cov += a * b;
    vp += a * a;
    vg += b * b;
  }
  if (vp <= 0.0 || vg <= 0.0) {
    throw UndefinedCorrelationError("correlation of a constant sequence");
  }
  return std::clamp(cov / std::sqrt(vp * vg), -1.0, 1.0);
}

EvalReport evaluate_run(const Dataset& dataset, const RunOutputs& outputs) {
  const std::size_t n = dataset.frame_count();
  if (outputs.alpha_hat.size() != n || outputs.rgb.size() != n ||
      outputs.depth.size() != n) {
    throw CoverageError("reconstruction covers " +
                        std::to_string(outputs.alpha_hat.size()) + " of " +
                        std::to_string(n) + " frames");
  }

  EvalReport report;
  std::vector<double> alpha_gt(n);
  for (std::size_t f = 0; f < n; ++f) {
    const Image gt_rgb = dataset.rgb(f);
    const Image gt_depth = dataset.depth(f);
    FrameMetrics m;
    m.frame = f;
    m.psnr = psnr(outputs.rgb[f], gt_rgb);
    m.ssim = ssim_eval(outputs.rgb[f], gt_rgb);
    try {
      m.depth_rmse = depth_rmse(outputs.depth[f], gt_depth);
      m.delta = delta_ratio(outputs.depth[f], gt_depth);
    } catch (const NoOverlapError&) {
      m.depth_rmse = std::numeric_limits<double>::quiet_NaN();
      m.delta = 0.0;
    }
    m.alpha_gt = dataset.meta().frames[f].alpha_gt;
    m.alpha_pred = outputs.alpha_hat[f];
    alpha_gt[f] = m.alpha_gt;
    report.frames.push_back(m);
  }

  std::size_t depth_frames = 0;
  for (const FrameMetrics& m : report.frames) {
    report.psnr += m.psnr;
    report.ssim += m.ssim;
    report.delta_125 += m.delta;
    if (std::isfinite(m.depth_rmse)) {
      report.depth_rmse += m.depth_rmse;
      ++depth_frames;
    }
  }
  report.psnr /= static_cast<double>(n);
  report.ssim /= static_cast<double>(n);
  report.delta_125 /= static_cast<double>(n);
  report.depth_rmse = depth_frames > 0
                          ? report.depth_rmse / static_cast<double>(depth_frames)
                          : std::numeric_limits<double>::quiet_NaN();

  report.phase_mae = phase_mae(outputs.alpha_hat, alpha_gt);
  try {
    report.pearson_r = pearson_r(outputs.alpha_hat, alpha_gt);
  } catch (const UndefinedCorrelationError&) {
    report.pearson_r = std::numeric_limits<double>::quiet_NaN();
  }

  const std::size_t last = n - 1;
  const Camera cam = dataset.meta().camera(last);
  const Plane plane = Plane::through(cam.center(), cam.optical_axis());
  const BreathingMesh& bm = dataset.mesh();
  const PlaneContour gt_contour = slice_mesh_plane(
      deform_mesh(bm, alpha_gt[last]), bm.insp.faces, plane);
  const PlaneContour pred_contour = slice_mesh_plane(
      deform_mesh(bm, std::clamp(outputs.alpha_hat[last], 0.0, 1.0)),
      bm.insp.faces, plane);
  try {
    const ContourComparison contour = contour_rmse(gt_contour, pred_contour);
    report.contour_rmse = contour.rmse;
    report.contour_matched_fraction = contour.matched_fraction();
    report.target_error = target_displacement(gt_contour, pred_contour, cam);
  } catch (const NoOverlapError&) {
    // The plane crosses disjoint edge sets: the phase is too far off for a
    // point-to-point comparison.
    report.contour_rmse = std::numeric_limits<double>::quiet_NaN();
    report.contour_matched_fraction = 0.0;
    report.target_error = std::numeric_limits<double>::quiet_NaN();
  }

  report.total_time = outputs.total_time;
  report.seconds_per_frame = outputs.total_time / static_cast<double>(n);
  return report;
}

RunOutputs load_run_outputs(const fs::path& run_dir, const Dataset& dataset) {
  const std::size_t n = dataset.frame_count();
  const auto& k = dataset.meta().intrinsics;
  RunOutputs out;

  std::ifstream phases(run_dir / "phases.json");
  if (!phases) throw CoverageError("missing " + (run_dir / "phases.json").string());
  try {
    nlohmann::json doc;
    phases >> doc;
    for (const auto& rec : doc) {
      const auto frame = rec.at("frame").get<std::size_t>();
      if (frame != out.alpha_hat.size()) {
        throw CoverageError("phases.json is missing frame " +
                            std::to_string(out.alpha_hat.size()));
      }
      out.alpha_hat.push_back(rec.at("alpha_hat").get<double>());
    }
    std::ifstream timing(run_dir / "timing.json");
    if (timing) {
      nlohmann::json t;
      timing >> t;
      out.total_time = t.at("total_seconds").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw CoverageError(std::string("malformed reconstruction output: ") + e.what());
  }
  if (out.alpha_hat.size() < n) {
    throw CoverageError("phases.json is missing frame " +
                        std::to_string(out.alpha_hat.size()));
  }
  out.alpha_hat.resize(n);

  for (std::size_t f = 0; f < n; ++f) {
    const fs::path rgb = run_dir / "renders" / frame_name(f, "ppm");
    const fs::path depth = run_dir / "renders" / frame_name(f, "f32");
    if (!fs::exists(rgb) || !fs::exists(depth)) {
      throw CoverageError("reconstruction is missing frame " + std::to_string(f));
    }
    out.rgb.push_back(read_ppm(rgb));
    out.depth.push_back(read_f32(depth, k.width, k.height));
  }
  return out;
}

namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

void write_report_json(const fs::path& path, const EvalReport& r) {
  const nlohmann::json doc = {
      {"psnr", number_or_null(r.psnr)},
      {"ssim", number_or_null(r.ssim)},
      {"depth_rmse", number_or_null(r.depth_rmse)},
      {"delta_125", number_or_null(r.delta_125)},
      {"phase_mae", number_or_null(r.phase_mae)},
      {"pearson_r", number_or_null(r.pearson_r)},
      {"contour_rmse", number_or_null(r.contour_rmse)},
      {"contour_matched_fraction", number_or_null(r.contour_matched_fraction)},
      {"target_error", number_or_null(r.target_error)},
      {"total_time", number_or_null(r.total_time)},
      {"seconds_per_frame", number_or_null(r.seconds_per_frame)},
  };
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_frame_csv(const fs::path& path, const EvalReport& r) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "frame,psnr,ssim,depth_rmse,delta,alpha_gt,alpha_pred\n";
  out << std::setprecision(10);
  for (const FrameMetrics& m : r.frames) {
    out << m.frame << ',' << m.psnr << ',' << m.ssim << ',' << m.depth_rmse
        << ',' << m.delta << ',' << m.alpha_gt << ',' << m.alpha_pred << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace airsplat
