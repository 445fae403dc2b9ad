#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "airsplat/camera.hpp"
#include "airsplat/geometry.hpp"
#include "airsplat/image.hpp"

namespace airsplat {

struct FrameRecord {
  int index = 0;
  Mat4 pose = Mat4::Identity();  // world-to-camera
  double alpha_gt = 0.0;
  double exposure_gain = 1.0;
};

struct DatasetMeta {
  Intrinsics intrinsics;
  double fps = 15.0;
  std::vector<FrameRecord> frames;

  Camera camera(std::size_t frame) const { return {intrinsics, frames.at(frame).pose}; }
};

/// On-disk sequence:
///   meta.json, mesh_insp.obj, mesh_exp.obj,
///   frames/%06d.ppm, depth/%06d.f32
class Dataset {
 public:
  /// Reads meta.json and both meshes. Throws DatasetError if anything is
  /// missing or inconsistent.
  static Dataset open(const std::filesystem::path& root);

  const DatasetMeta& meta() const { return meta_; }
  const BreathingMesh& mesh() const { return mesh_; }
  const std::filesystem::path& root() const { return root_; }
  std::size_t frame_count() const { return meta_.frames.size(); }

  Image rgb(std::size_t frame) const;
  Image depth(std::size_t frame) const;

  static std::filesystem::path rgb_path(const std::filesystem::path& root,
                                        std::size_t frame);
  static std::filesystem::path depth_path(const std::filesystem::path& root,
                                          std::size_t frame);

 private:
  std::filesystem::path root_;
  DatasetMeta meta_;
  BreathingMesh mesh_;
};

std::string frame_name(std::size_t frame, const char* ext);

void write_meta_json(const std::filesystem::path& path, const DatasetMeta& meta);
DatasetMeta read_meta_json(const std::filesystem::path& path);

}  // namespace airsplat
