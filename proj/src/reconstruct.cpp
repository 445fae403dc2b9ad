#include "airsplat/reconstruct.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "airsplat/error.hpp"
#include "airsplat/image_io.hpp"

namespace airsplat {

namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void write_reconstruction(const fs::path& out_dir, const SequenceResult& result) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) {
    throw IoError("cannot create " + out_dir.string());
  }

  nlohmann::json phases = nlohmann::json::array();
  for (std::size_t f = 0; f < result.track.alpha_hat.size(); ++f) {
    phases.push_back({{"frame", f},
                      {"theta", result.track.theta[f]},
                      {"alpha_hat", result.track.alpha_hat[f]}});
  }
  write_json(out_dir / "phases.json", phases);
  write_json(out_dir / "timing.json",
             {{"total_seconds", result.total_seconds},
              {"frame_seconds", result.frame_seconds}});
  write_cloud_json(out_dir / "cloud.json", result.cloud, "mesh_insp.obj");

  if (!result.rgb.empty()) {
    fs::create_directories(out_dir / "renders", ec);
    for (std::size_t f = 0; f < result.rgb.size(); ++f) {
      write_ppm(out_dir / "renders" / frame_name(f, "ppm"), result.rgb[f]);
      write_f32(out_dir / "renders" / frame_name(f, "f32"), result.depth[f]);
    }
  }
}

SequenceResult run_reconstruction(
    const Dataset& dataset, const ReconstructConfig& config,
    const fs::path& out_dir,
    const std::function<void(std::size_t, const FrameFit&)>& on_frame) {
  config.validate();
  SequenceResult result = fit_sequence(dataset, config.sequence_config(), on_frame);
  write_reconstruction(out_dir, result);
  return result;
}

RunOutputs run_outputs(const SequenceResult& result) {
  RunOutputs out;
  out.alpha_hat = result.track.alpha_hat;
  out.rgb = result.rgb;
  out.depth = result.depth;
  out.total_time = result.total_seconds;
  return out;
}

}  // namespace airsplat
