#include "airsplat/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "airsplat/error.hpp"

namespace airsplat {

using nlohmann::json;

void ReconstructConfig::validate() const {
  schedule.validate();
  weights.validate();
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("epsilon must lie in (0, 1)");
  }
  if (!(max_scale_factor > 0.0)) {
    throw ConfigError("max_scale_factor must be > 0");
  }
  if (!(gaussians_per_face > 0.0)) {
    throw ConfigError("gaussians_per_face must be > 0");
  }
  if (grid_size < 2) throw ConfigError("grid_size must be >= 2");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (frozen_phase && !(*frozen_phase >= 0.0 && *frozen_phase <= 1.0)) {
    throw ConfigError("frozen_phase must lie in [0, 1]");
  }
  if (first_frame_iters && *first_frame_iters < 0) {
    throw ConfigError("first_frame_iters must be >= 0");
  }
}

SequenceConfig ReconstructConfig::sequence_config() const {
  SequenceConfig c;
  c.fit.schedule = schedule;
  c.fit.weights = weights;
  c.fit.epsilon = epsilon;
  c.fit.max_scale_factor = max_scale_factor;
  c.fit.render.workers = workers;
  c.gaussians_per_face = gaussians_per_face;
  c.seed = seed;
  c.grid_size = grid_size;
  c.frozen_phase = frozen_phase;
  c.first_frame_iters = first_frame_iters;
  c.keep_renders = write_renders;
  return c;
}

namespace {

// Reads the keys of one JSON object, remembering which were consumed.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError("'" + label() + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("invalid value for key '" + qualified(key) + "'");
    }
  }

  void read(const char* key, Vec3& out) {
    std::array<double, 3> v{out.x(), out.y(), out.z()};
    read(key, v);
    out = Vec3(v[0], v[1], v[2]);
  }

  template <typename T>
  void read(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    if (it->is_null()) {
      out.reset();
    } else if (std::is_integral_v<T> ? it->is_number_integer() : it->is_number()) {
      out = it->template get<T>();
    } else {
      throw ConfigError("invalid value for key '" + qualified(key) + "'");
    }
  }

  /// Applies `fn` to the nested section (an empty object when absent).
  template <typename Fn>
  void nested(const char* key, Fn&& fn) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    static const json kEmpty = json::object();
    Section child(it == obj_.end() ? kEmpty : *it, qualified(key));
    fn(child);
    child.finish();
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + qualified(key) + "'");
    }
  }

  /// Runs a validator and reports failures against this section.
  template <typename Fn>
  void check(Fn&& fn) const {
    try {
      fn();
    } catch (const Error& e) {
      throw ConfigError("'" + label() + "': " + e.what());
    }
  }

 private:
  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_sim(Section& s, SimConfig& c) {
  s.nested("airway", [&](Section& a) {
    auto& x = c.airway;
    a.read("tree_depth", x.tree_depth);
    a.read("root_length", x.root_length);
    a.read("root_radius", x.root_radius);
    a.read("length_taper", x.length_taper);
    a.read("radius_taper", x.radius_taper);
    a.read("branch_angle", x.branch_angle);
    a.read("ring_vertices", x.ring_vertices);
    a.read("rings_per_segment", x.rings_per_segment);
    a.read("rng_seed", x.rng_seed);
    a.check([&] { x.validate(); });
  });
  s.nested("deformation", [&](Section& d) {
    auto& x = c.deformation;
    d.read("radial_amplitude", x.radial_amplitude);
    d.read("axial_amplitude", x.axial_amplitude);
    d.read("depth_weighting", x.depth_weighting);
    d.read("axial_direction", x.axial_direction);
    d.check([&] { x.validate(); });
  });
  s.nested("breathing", [&](Section& b) {
    auto& x = c.breathing;
    b.read("t_inhale", x.t_inhale);
    b.read("t_exhale", x.t_exhale);
    b.read("rate_scale", x.rate_scale);
    b.check([&] { x.validate(); });
  });
  s.nested("trajectory", [&](Section& t) {
    auto& x = c.trajectory;
    t.read("speed", x.speed);
    t.read("fps", x.fps);
    t.read("endpoint_seed", x.endpoint_seed);
    t.check([&] { x.validate(); });
  });
  s.nested("material", [&](Section& m) {
    auto& x = c.material;
    m.read("base_albedo", x.base_albedo);
    m.read("albedo_noise_amplitude", x.albedo_noise_amplitude);
    m.read("noise_cell", x.noise_cell);
    m.read("specular_exponent", x.specular_exponent);
    m.read("specular_strength", x.specular_strength);
    m.read("light_intensity", x.light_intensity);
    m.read("exposure_jitter_range", x.exposure_jitter_range);
    m.read("rng_seed", x.rng_seed);
    m.check([&] { x.validate(); });
  });
  s.nested("sequence", [&](Section& q) {
    auto& x = c.sequence;
    q.read("frames", x.frames);
    q.read("width", x.width);
    q.read("height", x.height);
    q.read("hfov_degrees", x.hfov_degrees);
    q.check([&] { x.validate(); });
  });
}

void read_reconstruct(Section& s, ReconstructConfig& c) {
  s.nested("schedule", [&](Section& x) {
    auto& v = c.schedule;
    x.read("iters_phase_only", v.iters_phase_only);
    x.read("iters_appearance_only", v.iters_appearance_only);
    x.read("iters_joint", v.iters_joint);
    x.read("lr_theta", v.lr_theta);
    x.read("lr_bary_logits", v.lr_bary_logits);
    x.read("lr_log_scales", v.lr_log_scales);
    x.read("lr_sh", v.lr_sh);
    x.check([&] { v.validate(); });
  });
  s.nested("weights", [&](Section& x) {
    auto& v = c.weights;
    x.read("w_c", v.w_c);
    x.read("w_s", v.w_s);
    x.read("w_t", v.w_t);
    x.check([&] { v.validate(); });
  });
  s.read("epsilon", c.epsilon);
  s.read("max_scale_factor", c.max_scale_factor);
  s.read("gaussians_per_face", c.gaussians_per_face);
  s.read("seed", c.seed);
  s.read("grid_size", c.grid_size);
  s.read("workers", c.workers);
  s.read("frozen_phase", c.frozen_phase);
  s.read("first_frame_iters", c.first_frame_iters);
  s.read("write_renders", c.write_renders);
  s.check([&] { c.validate(); });
}

json to_json(const RunConfig& rc) {
  const SimConfig& s = rc.sim;
  const ReconstructConfig& r = rc.reconstruct;
  const Vec3& ax = s.deformation.axial_direction;
  return {
      {"sim",
       {{"airway",
         {{"tree_depth", s.airway.tree_depth},
          {"root_length", s.airway.root_length},
          {"root_radius", s.airway.root_radius},
          {"length_taper", s.airway.length_taper},
          {"radius_taper", s.airway.radius_taper},
          {"branch_angle", s.airway.branch_angle},
          {"ring_vertices", s.airway.ring_vertices},
          {"rings_per_segment", s.airway.rings_per_segment},
          {"rng_seed", s.airway.rng_seed}}},
        {"deformation",
         {{"radial_amplitude", s.deformation.radial_amplitude},
          {"axial_amplitude", s.deformation.axial_amplitude},
          {"depth_weighting", s.deformation.depth_weighting},
          {"axial_direction", {ax.x(), ax.y(), ax.z()}}}},
        {"breathing",
         {{"t_inhale", s.breathing.t_inhale},
          {"t_exhale", s.breathing.t_exhale},
          {"rate_scale", s.breathing.rate_scale}}},
        {"trajectory",
         {{"speed", s.trajectory.speed},
          {"fps", s.trajectory.fps},
          {"endpoint_seed", s.trajectory.endpoint_seed}}},
        {"material",
         {{"base_albedo", s.material.base_albedo},
          {"albedo_noise_amplitude", s.material.albedo_noise_amplitude},
          {"noise_cell", s.material.noise_cell},
          {"specular_exponent", s.material.specular_exponent},
          {"specular_strength", s.material.specular_strength},
          {"light_intensity", s.material.light_intensity},
          {"exposure_jitter_range", s.material.exposure_jitter_range},
          {"rng_seed", s.material.rng_seed}}},
        {"sequence",
         {{"frames", s.sequence.frames},
          {"width", s.sequence.width},
          {"height", s.sequence.height},
          {"hfov_degrees", s.sequence.hfov_degrees}}}}},
      {"reconstruct",
       {{"schedule",
         {{"iters_phase_only", r.schedule.iters_phase_only},
          {"iters_appearance_only", r.schedule.iters_appearance_only},
          {"iters_joint", r.schedule.iters_joint},
          {"lr_theta", r.schedule.lr_theta},
          {"lr_bary_logits", r.schedule.lr_bary_logits},
          {"lr_log_scales", r.schedule.lr_log_scales},
          {"lr_sh", r.schedule.lr_sh}}},
        {"weights",
         {{"w_c", r.weights.w_c}, {"w_s", r.weights.w_s}, {"w_t", r.weights.w_t}}},
        {"epsilon", r.epsilon},
        {"max_scale_factor", r.max_scale_factor},
        {"gaussians_per_face", r.gaussians_per_face},
        {"seed", r.seed},
        {"grid_size", r.grid_size},
        {"workers", r.workers},
        {"frozen_phase",
         r.frozen_phase ? json(*r.frozen_phase) : json(nullptr)},
        {"first_frame_iters",
         r.first_frame_iters ? json(*r.first_frame_iters) : json(nullptr)},
        {"write_renders", r.write_renders}}}};
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  RunConfig config;
  Section root(doc, "");
  root.nested("sim", [&](Section& s) { read_sim(s, config.sim); });
  root.nested("reconstruct",
              [&](Section& s) { read_reconstruct(s, config.reconstruct); });
  root.finish();

  const auto check = [](const char* section, auto&& validate) {
    try {
      validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("'") + section + "': " + e.what());
    }
  };
  check("sim.airway", [&] { config.sim.airway.validate(); });
  check("sim.deformation", [&] { config.sim.deformation.validate(); });
  check("sim.breathing", [&] { config.sim.breathing.validate(); });
  check("sim.trajectory", [&] { config.sim.trajectory.validate(); });
  check("sim.material", [&] { config.sim.material.validate(); });
  check("sim.sequence", [&] { config.sim.sequence.validate(); });
  check("reconstruct.schedule", [&] { config.reconstruct.schedule.validate(); });
  check("reconstruct.weights", [&] { config.reconstruct.weights.validate(); });
  check("reconstruct", [&] { config.reconstruct.validate(); });
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& config) {
  return to_json(config).dump(2);
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << dump_run_config(config) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace airsplat
