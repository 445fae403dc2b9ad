#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "airsplat/optim.hpp"
#include "airsplat/sim.hpp"

namespace airsplat {

struct ReconstructConfig {
  Schedule schedule;
  LossWeights weights;
  double epsilon = kDefaultLeak;
  double max_scale_factor = 2.0;
  double gaussians_per_face = 3.0;
  std::uint64_t seed = 7;
  int grid_size = 33;
  int workers = 1;
  std::optional<double> frozen_phase;  // ablation: hold alpha fixed
  std::optional<int> first_frame_iters;
  bool write_renders = true;

  void validate() const;
  SequenceConfig sequence_config() const;
};

/// One JSON document configures every subcommand:
///   { "sim": { "airway", "deformation", "breathing", "trajectory",
///              "material", "sequence" },
///     "reconstruct": { "schedule", "weights", ... } }
/// Missing keys take their defaults; unknown keys are rejected.
struct RunConfig {
  SimConfig sim;
  ReconstructConfig reconstruct;
};

/// Throws ConfigError naming the offending key (dotted path).
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Complete document with every field spelled out.
std::string dump_run_config(const RunConfig& config);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace airsplat
