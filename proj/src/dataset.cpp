#include "airsplat/dataset.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "airsplat/error.hpp"
#include "airsplat/image_io.hpp"

namespace airsplat {

std::string frame_name(std::size_t frame, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.%s", frame, ext);
  return buf;
}

std::filesystem::path Dataset::rgb_path(const std::filesystem::path& root,
                                        std::size_t frame) {
  return root / "frames" / frame_name(frame, "ppm");
}

std::filesystem::path Dataset::depth_path(const std::filesystem::path& root,
                                          std::size_t frame) {
  return root / "depth" / frame_name(frame, "f32");
}

void write_meta_json(const std::filesystem::path& path,
                     const DatasetMeta& meta) {
  nlohmann::json frames = nlohmann::json::array();
  for (const FrameRecord& f : meta.frames) {
    std::vector<double> pose(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) pose[r * 4 + c] = f.pose(r, c);
    frames.push_back({{"index", f.index},
                      {"pose", pose},
                      {"alpha_gt", f.alpha_gt},
                      {"exposure_gain", f.exposure_gain}});
  }
  const auto& k = meta.intrinsics;
  const nlohmann::json doc = {{"width", k.width},   {"height", k.height},
                              {"fx", k.fx},         {"fy", k.fy},
                              {"cx", k.cx},         {"cy", k.cy},
                              {"fps", meta.fps},
                              {"frame_count", meta.frames.size()},
                              {"frames", frames}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

DatasetMeta read_meta_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("missing " + path.string());
  try {
    nlohmann::json doc;
    in >> doc;
    DatasetMeta meta;
    auto& k = meta.intrinsics;
    k.width = doc.at("width").get<int>();
    k.height = doc.at("height").get<int>();
    k.fx = doc.at("fx").get<double>();
    k.fy = doc.at("fy").get<double>();
    k.cx = doc.at("cx").get<double>();
    k.cy = doc.at("cy").get<double>();
    meta.fps = doc.at("fps").get<double>();
    const auto count = doc.at("frame_count").get<std::size_t>();
    for (const auto& f : doc.at("frames")) {
      FrameRecord rec;
      rec.index = f.at("index").get<int>();
      const auto pose = f.at("pose").get<std::vector<double>>();
      if (pose.size() != 16) throw DatasetError("pose must have 16 entries");
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) rec.pose(r, c) = pose[r * 4 + c];
      rec.alpha_gt = f.at("alpha_gt").get<double>();
      rec.exposure_gain = f.at("exposure_gain").get<double>();
      meta.frames.push_back(rec);
    }
    if (meta.frames.size() != count) {
      throw DatasetError("frame_count does not match the frame records");
    }
    for (std::size_t i = 0; i < meta.frames.size(); ++i) {
      if (meta.frames[i].index != static_cast<int>(i)) {
        throw DatasetError("frame records must be indexed 0..n-1 in order");
      }
    }
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
}

Dataset Dataset::open(const std::filesystem::path& root) {
  Dataset ds;
  ds.root_ = root;
  ds.meta_ = read_meta_json(root / "meta.json");
  if (ds.meta_.frames.empty()) throw DatasetError("dataset has no frames");
  try {
    const TriMesh insp = read_obj(root / "mesh_insp.obj");
    const TriMesh exp = read_obj(root / "mesh_exp.obj");
    ds.mesh_ = BreathingMesh::from_pair(insp, exp);
  } catch (const Error& e) {
    throw DatasetError(std::string("invalid dataset meshes: ") + e.what());
  }
  for (std::size_t i = 0; i < ds.frame_count(); ++i) {
    if (!std::filesystem::exists(rgb_path(root, i))) {
      throw DatasetError("missing frame " + std::to_string(i) + " (" +
                         rgb_path(root, i).string() + ")");
    }
  }
  return ds;
}

Image Dataset::rgb(std::size_t frame) const {
  const Image img = read_ppm(rgb_path(root_, frame));
  if (img.width != meta_.intrinsics.width ||
      img.height != meta_.intrinsics.height) {
    throw DatasetError("frame " + std::to_string(frame) +
                       " resolution differs from meta.json");
  }
  return img;
}

Image Dataset::depth(std::size_t frame) const {
  return read_f32(depth_path(root_, frame), meta_.intrinsics.width,
                  meta_.intrinsics.height);
}

}  // namespace airsplat
