#pragma once

// JSON mapping for every configuration type, and the RunConfig that drives a
// full generate -> train -> evaluate run. Missing keys keep their defaults.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrcam/cam.hpp"
#include "hrcam/model.hpp"
#include "hrcam/simdata.hpp"
#include "hrcam/train.hpp"

namespace hrcam {

struct CamConfig {
  std::vector<cam::Method> methods{cam::Method::hrcam, cam::Method::gradcam,
                                   cam::Method::zhou};
  std::size_t class_id = 1;                 // maps are drawn for the abnormal class
  std::optional<std::size_t> gradcam_tap;   // default: penultimate tap
};

struct RunConfig {
  sim::SimConfig sim;
  ModelSpec model = ModelSpec::desk_default();
  TrainConfig phase1;
  TrainConfig phase2;
  CamConfig cam;
  std::string output_dir = "hrcam-run";

  /// The configuration used for reported results.
  static RunConfig defaults();

  /// Validates every section and the cross-section constraints.
  void validate() const;
};

void to_json(nlohmann::json& j, const BlockSpec& b);
void from_json(const nlohmann::json& j, BlockSpec& b);
void to_json(nlohmann::json& j, const ModelSpec& s);
void from_json(const nlohmann::json& j, ModelSpec& s);
void to_json(nlohmann::json& j, const TapSet& t);
void from_json(const nlohmann::json& j, TapSet& t);
void to_json(nlohmann::json& j, const AugmentConfig& a);
void from_json(const nlohmann::json& j, AugmentConfig& a);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const CamConfig& c);
void from_json(const nlohmann::json& j, CamConfig& c);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

namespace sim {
void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);
}  // namespace sim

/// Throws ConfigError on unreadable files, bad JSON or invalid values.
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& cfg);

}  // namespace hrcam
