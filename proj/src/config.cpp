#include "hrcam/config.hpp"

#include <fstream>

namespace hrcam {
namespace {

using nlohmann::json;

template <typename V>
void read_opt(const json& j, const char* key, V& field) {
  if (j.contains(key)) field = j.at(key).get<V>();
}

}  // namespace

namespace sim {

void to_json(json& j, const SimConfig& c) {
  j = json{{"image_size", c.image_size},
           {"per_class_count", c.per_class_count},
           {"train_count", c.train_count},
           {"test_count", c.test_count},
           {"background", c.background},
           {"noise", {{"distribution", "gaussian"}, {"mean", c.noise.mean}, {"sigma", c.noise.sigma}}},
           {"lesion_mix", c.lesion_mix},
           {"localized",
            {{"radius", {c.localized.radius.lo, c.localized.radius.hi}},
             {"delta", {c.localized.delta.lo, c.localized.delta.hi}}}},
           {"diffuse",
            {{"speckle_count", c.diffuse.speckle_count},
             {"speckle_radius", {c.diffuse.speckle_radius.lo, c.diffuse.speckle_radius.hi}},
             {"delta", {c.diffuse.delta.lo, c.diffuse.delta.hi}},
             {"region_fraction", {c.diffuse.region_fraction.lo, c.diffuse.region_fraction.hi}}}},
           {"seed", c.seed}};
}

namespace {
void read_range(const json& j, const char* key, Range& r) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 2) throw ConfigError(std::string(key) + " must be a [lo, hi] pair");
  r = {v[0], v[1]};
}
}  // namespace

void from_json(const json& j, SimConfig& c) {
  read_opt(j, "image_size", c.image_size);
  read_opt(j, "per_class_count", c.per_class_count);
  read_opt(j, "train_count", c.train_count);
  read_opt(j, "test_count", c.test_count);
  read_opt(j, "background", c.background);
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    if (n.contains("distribution") && n.at("distribution").get<std::string>() != "gaussian") {
      throw ConfigError("only gaussian noise is supported");
    }
    read_opt(n, "mean", c.noise.mean);
    read_opt(n, "sigma", c.noise.sigma);
  }
  read_opt(j, "lesion_mix", c.lesion_mix);
  if (j.contains("localized")) {
    read_range(j.at("localized"), "radius", c.localized.radius);
    read_range(j.at("localized"), "delta", c.localized.delta);
  }
  if (j.contains("diffuse")) {
    const json& d = j.at("diffuse");
    read_opt(d, "speckle_count", c.diffuse.speckle_count);
    read_range(d, "speckle_radius", c.diffuse.speckle_radius);
    read_range(d, "delta", c.diffuse.delta);
    read_range(d, "region_fraction", c.diffuse.region_fraction);
  }
  read_opt(j, "seed", c.seed);
}

}  // namespace sim

void to_json(json& j, const BlockSpec& b) {
  j = json{{"conv_channels", b.conv_channels},
           {"kernel_size", b.kernel_size},
           {"residual", b.residual},
           {"maxpool", b.maxpool}};
}

void from_json(const json& j, BlockSpec& b) {
  b.conv_channels = j.at("conv_channels").get<std::vector<std::size_t>>();
  read_opt(j, "kernel_size", b.kernel_size);
  read_opt(j, "residual", b.residual);
  read_opt(j, "maxpool", b.maxpool);
}

void to_json(json& j, const ModelSpec& s) {
  j = json{{"blocks", s.blocks}, {"input_shape", s.input_shape}, {"class_count", s.class_count},
           {"input_mean", s.input_mean}};
}

void from_json(const json& j, ModelSpec& s) {
  read_opt(j, "blocks", s.blocks);
  read_opt(j, "input_shape", s.input_shape);
  read_opt(j, "class_count", s.class_count);
  read_opt(j, "input_mean", s.input_mean);
}

void to_json(json& j, const TapSet& t) {
  j = json{{"layer_ids", t.layer_ids},
           {"block_indices", t.block_indices},
           {"channels", t.channels},
           {"total_channels", t.total_channels()}};
}

void from_json(const json& j, TapSet& t) {
  t.layer_ids = j.at("layer_ids").get<std::vector<std::string>>();
  t.block_indices = j.at("block_indices").get<std::vector<std::size_t>>();
  t.channels = j.at("channels").get<std::vector<std::size_t>>();
}

void to_json(json& j, const AugmentConfig& a) {
  j = json{{"translate_px", a.translate_px}, {"rotate_deg_max", a.rotate_deg_max},
           {"hflip", a.hflip},               {"vflip", a.vflip},
           {"fill_mean", a.fill_mean},       {"fill_sigma", a.fill_sigma}};
}

void from_json(const json& j, AugmentConfig& a) {
  read_opt(j, "translate_px", a.translate_px);
  read_opt(j, "rotate_deg_max", a.rotate_deg_max);
  read_opt(j, "hflip", a.hflip);
  read_opt(j, "vflip", a.vflip);
  read_opt(j, "fill_mean", a.fill_mean);
  read_opt(j, "fill_sigma", a.fill_sigma);
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"learning_rate", c.learning_rate},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"epsilon", c.epsilon},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"seed", c.seed},
           {"augmentation", c.augmentation},
           {"gap_on_native_taps", c.gap_on_native_taps}};
}

void from_json(const json& j, TrainConfig& c) {
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "beta1", c.beta1);
  read_opt(j, "beta2", c.beta2);
  read_opt(j, "epsilon", c.epsilon);
  read_opt(j, "epochs", c.epochs);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "seed", c.seed);
  if (j.contains("augmentation")) {
    if (j.at("augmentation").is_boolean()) {
      if (!j.at("augmentation").get<bool>()) c.augmentation = AugmentConfig::none();
    } else {
      from_json(j.at("augmentation"), c.augmentation);
    }
  }
  read_opt(j, "gap_on_native_taps", c.gap_on_native_taps);
}

void to_json(json& j, const CamConfig& c) {
  std::vector<std::string> names;
  for (auto m : c.methods) names.push_back(cam::to_string(m));
  j = json{{"methods", names}, {"class_id", c.class_id}};
  if (c.gradcam_tap) j["gradcam_layer"] = *c.gradcam_tap;
  else j["gradcam_layer"] = nullptr;
}

void from_json(const json& j, CamConfig& c) {
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& name : j.at("methods").get<std::vector<std::string>>()) {
      try {
        c.methods.push_back(cam::parse_method(name));
      } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
      }
    }
  }
  read_opt(j, "class_id", c.class_id);
  if (j.contains("gradcam_layer") && !j.at("gradcam_layer").is_null()) {
    c.gradcam_tap = j.at("gradcam_layer").get<std::size_t>();
  }
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"sim", c.sim},
           {"model", c.model},
           {"train", {{"phase1", c.phase1}, {"phase2", c.phase2}}},
           {"cam", c.cam},
           {"output_dir", c.output_dir}};
}

void from_json(const json& j, RunConfig& c) {
  // Sections merge into the existing values rather than resetting them.
  if (j.contains("sim")) sim::from_json(j.at("sim"), c.sim);
  if (j.contains("model")) from_json(j.at("model"), c.model);
  if (j.contains("train")) {
    const json& t = j.at("train");
    if (t.contains("phase1")) from_json(t.at("phase1"), c.phase1);
    if (t.contains("phase2")) from_json(t.at("phase2"), c.phase2);
  }
  if (j.contains("cam")) from_json(j.at("cam"), c.cam);
  read_opt(j, "output_dir", c.output_dir);
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.phase1.learning_rate = 1e-4;
  c.phase1.epochs = 6;
  c.phase1.batch_size = 16;
  c.phase1.seed = 7;
  c.phase1.augmentation.fill_mean = c.sim.background;
  c.phase1.augmentation.fill_sigma = c.sim.noise.sigma;

  c.phase2.learning_rate = 1e-4;
  c.phase2.epochs = 60;
  c.phase2.batch_size = 16;
  c.phase2.seed = 11;
  c.phase2.augmentation = AugmentConfig::none();
  return c;
}

void RunConfig::validate() const {
  sim.validate();
  model.validate();
  phase1.validate();
  phase2.validate();
  if (model.input_shape[0] != 1 || model.input_shape[1] != sim.image_size ||
      model.input_shape[2] != sim.image_size) {
    throw ConfigError("model input_shape must be [1, image_size, image_size]");
  }
  if (cam.class_id >= model.class_count) throw ConfigError("cam.class_id out of range");
  if (cam.methods.empty()) throw ConfigError("cam.methods is empty");
  if (cam.gradcam_tap && *cam.gradcam_tap >= derive_taps(model).size()) {
    throw ConfigError("cam.gradcam_layer is not a tap index");
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  RunConfig cfg = RunConfig::defaults();
  try {
    from_json(json::parse(in), cfg);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

void save_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << json(cfg).dump(2) << '\n';
}

}  // namespace hrcam
