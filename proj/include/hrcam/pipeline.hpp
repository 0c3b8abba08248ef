#pragma once

// End-to-end steps shared by the CLI and the acceptance suite.

#include <filesystem>
#include <string>
#include <vector>

#include "hrcam/config.hpp"
#include "hrcam/eval.hpp"
#include "hrcam/model.hpp"

namespace hrcam::pipeline {

struct TrainedModel {
  ModelFile model;
  TrainLog phase1;
  TrainLog phase2;
  std::uint64_t backbone_checksum_before = 0;
  std::uint64_t backbone_checksum_after = 0;
};

/// Mean over every pixel of every sample image, 0 for no samples.
double mean_pixel(const std::vector<sim::Sample>& samples);

/// Phase 1 then phase 2 on the training split, with the model's input_mean
/// set to the mean training pixel.
/// Receives "phase1" or "phase2", the epoch index and the log so far.
using TrainProgress =
    std::function<void(const std::string& phase, std::size_t epoch, const TrainLog& log)>;

TrainedModel train(const std::vector<sim::Sample>& train_samples, const RunConfig& cfg,
                   const TrainProgress& progress = {});

/// Per-epoch losses and the frozen-backbone checksums as JSON.
void write_training_log(const std::filesystem::path& path, const TrainedModel& trained);

/// Map for one sample image; requires a head for hrcam.
cam::CamMap<float> make_cam(const ModelFile& model, const Tensor<float>& image,
                            cam::Method method, std::size_t class_id,
                            std::optional<std::size_t> gradcam_tap = std::nullopt);

struct EvaluationReport {
  std::vector<eval::MethodMetrics> methods;
  double backbone_accuracy = 0.0;
  double head_accuracy = 0.0;
  std::size_t abnormal_samples = 0;
  std::vector<std::string> diagnostics;
};

/// Localization sweep per method over abnormal test samples, plus test
/// accuracy of both classifiers. Throws DataError without abnormal samples.
EvaluationReport evaluate(const ModelFile& model, const std::vector<sim::Sample>& test,
                          const CamConfig& cam_cfg);

/// metrics.csv and summary.json (accuracies plus the given config echo).
void write_evaluation(const std::filesystem::path& dir, const EvaluationReport& report,
                      const nlohmann::json& config_echo);

struct OrderingCheck {
  bool holds = true;
  std::vector<std::string> lines;  // one per compared quantity
};

/// Non-strict check that hrcam >= gradcam >= zhou for sensitivity,
/// specificity and precision means, and the reverse for fallout. Throws
/// DataError if any of the three methods is missing.
OrderingCheck compare_ordering(const std::vector<eval::MethodMetrics>& methods);

}  // namespace hrcam::pipeline
