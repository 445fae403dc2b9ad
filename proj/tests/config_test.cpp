#include <string>

#include <gtest/gtest.h>

#include "airsplat/config.hpp"
#include "airsplat/error.hpp"
#include "support.hpp"

namespace airsplat {
namespace {

std::string config_error(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, EmptyDocumentGivesDefaults) {
  const RunConfig c = parse_run_config("{}");
  EXPECT_EQ(c.sim.airway.tree_depth, 3);
  EXPECT_EQ(c.sim.sequence.frames, 420);
  EXPECT_EQ(c.sim.trajectory.speed, 10.0);
  EXPECT_EQ(c.reconstruct.schedule.iters_phase_only, 30);
  EXPECT_EQ(c.reconstruct.weights.w_t, 0.1);
  EXPECT_FALSE(c.reconstruct.frozen_phase.has_value());
  EXPECT_FALSE(c.reconstruct.first_frame_iters.has_value());
}

TEST(Config, PartialOverridesKeepOtherDefaults) {
  const RunConfig c = parse_run_config(R"({
    "sim": {"sequence": {"frames": 60}, "deformation": {"axial_direction": [0, 1, 0]}},
    "reconstruct": {"schedule": {"lr_sh": 0.01}, "frozen_phase": 0.5, "seed": 11}
  })");
  EXPECT_EQ(c.sim.sequence.frames, 60);
  EXPECT_EQ(c.sim.sequence.width, 128);
  EXPECT_EQ(c.sim.deformation.axial_direction, Vec3(0, 1, 0));
  EXPECT_EQ(c.reconstruct.schedule.lr_sh, 0.01);
  EXPECT_EQ(c.reconstruct.schedule.lr_theta, 0.05);
  EXPECT_EQ(c.reconstruct.frozen_phase, 0.5);
  EXPECT_EQ(c.reconstruct.seed, 11u);
}

TEST(Config, DumpRoundTripsUnchanged) {
  RunConfig c;
  c.sim.airway.branch_angle = 31.25;
  c.sim.material.base_albedo = {0.1, 0.2, 0.3};
  c.sim.breathing.rate_scale = 1.0 / 3.0;
  c.reconstruct.gaussians_per_face = 2.5;
  c.reconstruct.frozen_phase = 0.25;
  c.reconstruct.write_renders = false;
  c.reconstruct.first_frame_iters = 150;
  const std::string text = dump_run_config(c);
  const RunConfig back = parse_run_config(text);
  EXPECT_EQ(dump_run_config(back), text);
  EXPECT_EQ(back.sim.breathing.rate_scale, 1.0 / 3.0);
  EXPECT_EQ(back.reconstruct.frozen_phase, 0.25);
  EXPECT_EQ(back.reconstruct.first_frame_iters, 150);
  EXPECT_EQ(back.reconstruct.sequence_config().first_frame_iters, 150);
  EXPECT_EQ(dump_run_config(parse_run_config(dump_run_config(RunConfig{}))),
            dump_run_config(RunConfig{}));
}

TEST(Config, SaveAndLoad) {
  const auto dir = testing::scratch_dir("config_io");
  RunConfig c;
  c.sim.sequence.frames = 77;
  save_run_config(dir / "run.json", c);
  EXPECT_EQ(load_run_config(dir / "run.json").sim.sequence.frames, 77);
  EXPECT_THROW(load_run_config(dir / "missing.json"), ConfigError);
}

TEST(Config, UnknownKeysAreNamed) {
  EXPECT_NE(config_error(R"({"simm": {}})").find("simm"), std::string::npos);
  EXPECT_NE(config_error(R"({"sim": {"airway": {"depth": 2}}})").find("sim.airway.depth"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"reconstruct": {"schedule": {"iters": 2}}})")
                .find("reconstruct.schedule.iters"),
            std::string::npos);
}

TEST(Config, WrongTypesAreNamed) {
  EXPECT_NE(config_error(R"({"sim": {"sequence": {"frames": "many"}}})")
                .find("sim.sequence.frames"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"reconstruct": {"first_frame_iters": 2.5}})")
                .find("reconstruct.first_frame_iters"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"sim": {"airway": 3}})").find("sim.airway"), std::string::npos);
  EXPECT_NE(config_error(R"({"sim": {"deformation": {"axial_direction": [1, 0]}}})")
                .find("axial_direction"),
            std::string::npos);
}

TEST(Config, InvalidValuesNameTheSection) {
  EXPECT_NE(config_error(R"({"sim": {"sequence": {"frames": 0}}})").find("sim.sequence"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"reconstruct": {"schedule": {"iters_joint": 0}}})")
                .find("reconstruct.schedule"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"reconstruct": {"max_scale_factor": 0}})").find("max_scale_factor"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"reconstruct": {"first_frame_iters": -1}})")
                .find("first_frame_iters"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"reconstruct": {"frozen_phase": 1.5}})").find("frozen_phase"),
            std::string::npos);
}

TEST(Config, MalformedJson) {
  EXPECT_NE(config_error("{ \"sim\": ").find("malformed"), std::string::npos);
  EXPECT_NE(config_error("[1, 2]"), "");
}

}  // namespace
}  // namespace airsplat
