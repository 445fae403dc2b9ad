#pragma once

#include <filesystem>
#include <functional>

#include "airsplat/config.hpp"
#include "airsplat/dataset.hpp"
#include "airsplat/metrics.hpp"
#include "airsplat/optim.hpp"

namespace airsplat {

/// Fits the sequence and writes, under `out_dir`:
///   phases.json   [{frame, theta, alpha_hat}, ...]
///   cloud.json    final Gaussian cloud
///   timing.json   {total_seconds, frame_seconds}
///   renders/%06d.ppm, renders/%06d.f32   (when write_renders is set)
SequenceResult run_reconstruction(
    const Dataset& dataset, const ReconstructConfig& config,
    const std::filesystem::path& out_dir,
    const std::function<void(std::size_t, const FrameFit&)>& on_frame = {});

void write_reconstruction(const std::filesystem::path& out_dir,
                          const SequenceResult& result);

/// In-memory view of a finished fit for evaluate_run.
RunOutputs run_outputs(const SequenceResult& result);

}  // namespace airsplat
