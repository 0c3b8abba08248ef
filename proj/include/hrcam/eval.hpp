#pragma once

// Threshold-sweep localization metrics against ground-truth masks, plus
// classification accuracy.

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hrcam/binary_map.hpp"
#include "hrcam/cam.hpp"
#include "hrcam/simdata.hpp"

namespace hrcam::eval {

inline constexpr std::size_t kThresholdCount = 9;

/// 0.1, 0.2, ..., 0.9 computed as k / 10.
std::array<double, kThresholdCount> thresholds();

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Rates {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double fallout = 0.0;
  friend bool operator==(const Rates&, const Rates&) = default;
};

struct ThresholdRow {
  double threshold = 0.0;
  Rates rates;
  friend bool operator==(const ThresholdRow&, const ThresholdRow&) = default;
};

struct EvalMetrics {
  std::vector<ThresholdRow> per_threshold;
  Rates means;  // unweighted average over the threshold rows
  friend bool operator==(const EvalMetrics&, const EvalMetrics&) = default;
};

/// Pixel is positive iff value > t. Rejects maps that are not flagged
/// normalized or hold values outside [0, 1].
BinaryMap binarize(const cam::CamMap<float>& map, double t);
BinaryMap binarize(const Tensor<float>& normalized, double t);

ConfusionCounts confusion(const BinaryMap& predicted, const BinaryMap& truth);

/// Any 0/0 ratio is reported as 0.
Rates metrics_from_counts(const ConfusionCounts& c);

/// Nine-threshold sweep. Throws InvalidInput when the mask is empty or full.
EvalMetrics sweep(const Tensor<float>& normalized, const BinaryMap& mask);

using CamGenerator = std::function<cam::CamMap<float>(const sim::Sample&)>;

struct MethodEvaluation {
  EvalMetrics metrics;
  std::size_t samples_used = 0;
  std::vector<std::string> diagnostics;  // samples excluded and why
};

/// Sweeps the normalized CAM of every abnormal sample, averages each
/// threshold row across samples in sample order, then averages the rows.
/// Throws DataError if no abnormal sample is usable.
MethodEvaluation evaluate_method(const std::vector<sim::Sample>& samples,
                                 const CamGenerator& generator);

/// Maps a [B, 1, H, W] batch to [B, classes] scores.
using Classifier = std::function<Tensor<float>(const Tensor<float>&)>;

/// Fraction of samples whose argmax score equals the label; ties go to the
/// lowest class index.
double classification_accuracy(const std::vector<sim::Sample>& samples,
                               const Classifier& classifier,
                               std::size_t batch_size = 32);

std::size_t argmax_row(const Tensor<float>& scores, std::size_t row);

struct MethodMetrics {
  std::string method;
  EvalMetrics metrics;
};

/// Columns: method,threshold,sensitivity,specificity,precision,fallout. Each
/// method contributes nine threshold rows and one "mean" row. Values use the
/// shortest round-trip decimal form.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MethodMetrics>& methods);
std::vector<MethodMetrics> read_metrics_csv(const std::filesystem::path& path);

}  // namespace hrcam::eval
