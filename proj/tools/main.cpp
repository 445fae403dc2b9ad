#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "airsplat/config.hpp"
#include "airsplat/dataset.hpp"
#include "airsplat/error.hpp"
#include "airsplat/image_io.hpp"
#include "airsplat/metrics.hpp"
#include "airsplat/reconstruct.hpp"
#include "airsplat/sim.hpp"

namespace fs = std::filesystem;
using namespace airsplat;

namespace {

struct Resolution {
  int width = 0;
  int height = 0;
};

Resolution parse_resolution(const std::string& text) {
  Resolution r;
  char x = 0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%d%c%d%c", &r.width, &x, &r.height, &extra) != 3 ||
      (x != 'x' && x != 'X')) {
    throw ConfigError("--resolution expects WxH, got '" + text + "'");
  }
  return r;
}

RunConfig load_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

void print_report(const EvalReport& r) {
  const auto row = [](const char* name, double value, const char* unit) {
    std::printf("  %-18s %12.4f  %s\n", name, value, unit);
  };
  std::printf("  %-18s %12s\n", "metric", "value");
  row("psnr", r.psnr, "dB");
  row("ssim", r.ssim, "");
  row("depth_rmse", r.depth_rmse, "mm");
  row("delta_125", r.delta_125, "");
  row("phase_mae", r.phase_mae, "");
  row("pearson_r", r.pearson_r, "");
  row("contour_rmse", r.contour_rmse, "mm");
  row("contour_matched", r.contour_matched_fraction, "");
  row("target_error", r.target_error, "mm");
  row("total_time", r.total_time, "s");
  row("seconds_per_frame", r.seconds_per_frame, "s");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Breathing-aware Gaussian splat reconstruction for synthetic bronchoscopy"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string dataset_dir;
  std::string run_dir;
  std::string csv_path;
  std::string resolution;
  std::optional<std::uint64_t> seed;
  std::optional<int> frames;
  std::optional<double> frozen_phase;
  std::optional<int> workers;
  std::size_t frame_index = 0;

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic breathing-airway dataset");
  simulate->add_option("--config", config_path, "Run configuration (JSON)");
  simulate->add_option("--out", out, "Dataset directory")->required();
  simulate->add_option("--seed", seed, "Seed for geometry, trajectory and material");
  simulate->add_option("--frames", frames, "Number of frames");
  simulate->add_option("--resolution", resolution, "Image size as WxH");

  auto* reconstruct = app.add_subcommand("reconstruct", "Fit Gaussians and per-frame breathing phase");
  reconstruct->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  reconstruct->add_option("--config", config_path, "Run configuration (JSON)");
  reconstruct->add_option("--out", out, "Output directory")->required();
  reconstruct->add_option("--seed", seed, "Gaussian seeding seed");
  reconstruct->add_option("--frozen-phase", frozen_phase, "Hold the phase fixed (ablation)");
  reconstruct->add_option("--workers", workers, "Renderer threads");

  auto* evaluate = app.add_subcommand("evaluate", "Score a reconstruction against ground truth");
  evaluate->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  evaluate->add_option("--run", run_dir, "Reconstruction directory")->required();
  evaluate->add_option("--out", out, "report.json path")->required();
  evaluate->add_option("--csv", csv_path, "Optional per-frame CSV");

  auto* preview = app.add_subcommand("preview", "Write one frame's RGB and depth as PPM");
  preview->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  preview->add_option("--frame", frame_index, "Frame index")->required();
  preview->add_option("--out", out, "Output directory")->required();

  auto* defaults = app.add_subcommand("defaults", "Print the default configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      RunConfig cfg = load_or_default(config_path);
      SimConfig& sim = cfg.sim;
      if (seed) {
        sim.airway.rng_seed = *seed;
        sim.trajectory.endpoint_seed = *seed;
        sim.material.rng_seed = *seed;
      }
      if (frames) sim.sequence.frames = *frames;
      if (!resolution.empty()) {
        const Resolution r = parse_resolution(resolution);
        sim.sequence.width = r.width;
        sim.sequence.height = r.height;
      }
      sim.sequence.validate();
      const DatasetSummary s = generate_dataset(sim, out);
      std::printf("frames: %zu\nmax displacement: %.3f mm\n", s.frame_count,
                  s.max_displacement);
    } else if (*reconstruct) {
      RunConfig cfg = load_or_default(config_path);
      ReconstructConfig& rc = cfg.reconstruct;
      if (seed) rc.seed = *seed;
      if (frozen_phase) rc.frozen_phase = *frozen_phase;
      if (workers) rc.workers = *workers;
      rc.validate();
      const Dataset ds = Dataset::open(dataset_dir);
      const auto result = run_reconstruction(
          ds, rc, out, [&](std::size_t f, const FrameFit& fit) {
            std::fprintf(stderr, "frame %zu/%zu alpha_hat %.4f loss %.5f\n", f + 1,
                         ds.frame_count(), fit.alpha_hat, fit.final_loss);
          });
      std::printf("frames: %zu\ntotal: %.2f s (%.3f s/frame)\n",
                  result.track.alpha_hat.size(), result.total_seconds,
                  result.total_seconds / result.track.alpha_hat.size());
    } else if (*evaluate) {
      const Dataset ds = Dataset::open(dataset_dir);
      const RunOutputs outputs = load_run_outputs(run_dir, ds);
      const EvalReport report = evaluate_run(ds, outputs);
      write_report_json(out, report);
      if (!csv_path.empty()) write_frame_csv(csv_path, report);
      print_report(report);
    } else if (*preview) {
      const Dataset ds = Dataset::open(dataset_dir);
      if (frame_index >= ds.frame_count()) {
        throw IndexError("frame " + std::to_string(frame_index) + " is out of range (" +
                         std::to_string(ds.frame_count()) + " frames)");
      }
      fs::create_directories(out);
      char stem[32];
      std::snprintf(stem, sizeof(stem), "frame_%06zu", frame_index);
      const fs::path rgb = fs::path(out) / (std::string(stem) + "_rgb.ppm");
      const fs::path depth = fs::path(out) / (std::string(stem) + "_depth.ppm");
      write_ppm(rgb, ds.rgb(frame_index));
      write_ppm(depth, colorize_depth(ds.depth(frame_index)));
      std::printf("%s\n%s\n", rgb.c_str(), depth.c_str());
    } else if (*defaults) {
      std::printf("%s\n", dump_run_config(RunConfig{}).c_str());
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 1;
  }
  return 0;
}
