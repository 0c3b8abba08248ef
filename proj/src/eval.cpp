#include "hrcam/eval.hpp"

#include <charconv>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>

namespace hrcam::eval {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("bad number in metrics CSV: '" + s + "'");
  }
  return v;
}

Rates average(const std::vector<ThresholdRow>& rows) {
  Rates m;
  for (const auto& r : rows) {
    m.sensitivity += r.rates.sensitivity;
    m.specificity += r.rates.specificity;
    m.precision += r.rates.precision;
  }
  const double n = static_cast<double>(rows.size());
  m.sensitivity /= n;
  m.specificity /= n;
  m.precision /= n;
  m.fallout = 1.0 - m.specificity;
  return m;
}

}  // namespace

std::array<double, kThresholdCount> thresholds() {
  std::array<double, kThresholdCount> t{};
  for (std::size_t k = 0; k < kThresholdCount; ++k) t[k] = static_cast<double>(k + 1) / 10.0;
  return t;
}

BinaryMap binarize(const cam::CamMap<float>& map, double t) {
  if (!map.normalized) throw InvalidInput("binarize: map has not been normalized");
  return binarize(map.values, t);
}

BinaryMap binarize(const Tensor<float>& normalized, double t) {
  if (normalized.rank() != 2) throw InvalidInput("binarize: expected an [H,W] map");
  BinaryMap out(normalized.dim(0), normalized.dim(1));
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    const float v = normalized[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw InvalidInput("binarize: value outside [0,1]; normalize the map first");
    }
    out.bits[i] = static_cast<double>(v) > t ? 1 : 0;
  }
  return out;
}

ConfusionCounts confusion(const BinaryMap& predicted, const BinaryMap& truth) {
  if (predicted.height != truth.height || predicted.width != truth.width) {
    throw InvalidInput("confusion: map and mask shapes differ");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted.bits[i] != 0, t = truth.bits[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Rates metrics_from_counts(const ConfusionCounts& c) {
  // fallout = fp / (fp + tn), taken as 1 - specificity so that identity
  // holds bit-for-bit.
  const double specificity = ratio(c.tn, c.tn + c.fp);
  const double fallout = c.tn + c.fp == 0 ? 0.0 : 1.0 - specificity;
  return {ratio(c.tp, c.tp + c.fn), specificity, ratio(c.tp, c.tp + c.fp), fallout};
}

EvalMetrics sweep(const Tensor<float>& normalized, const BinaryMap& mask) {
  const std::size_t positives = mask.count();
  if (positives == 0) throw InvalidInput("sweep: mask has no positive pixel");
  if (positives == mask.size()) throw InvalidInput("sweep: mask has no negative pixel");
  EvalMetrics m;
  for (double t : thresholds()) {
    m.per_threshold.push_back({t, metrics_from_counts(confusion(binarize(normalized, t), mask))});
  }
  m.means = average(m.per_threshold);
  return m;
}

MethodEvaluation evaluate_method(const std::vector<sim::Sample>& samples,
                                 const CamGenerator& generator) {
  std::vector<const sim::Sample*> abnormal;
  for (const auto& s : samples) {
    if (s.label == sim::Label::abnormal) abnormal.push_back(&s);
  }
  const auto n = static_cast<std::ptrdiff_t>(abnormal.size());
  std::vector<EvalMetrics> per_sample(abnormal.size());
  std::vector<std::string> skipped(abnormal.size());
  std::vector<std::exception_ptr> failures(abnormal.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const sim::Sample& s = *abnormal[static_cast<std::size_t>(i)];
    const std::size_t positives = s.mask.count();
    if (positives == 0 || positives == s.mask.size()) {
      skipped[i] = "sample " + std::to_string(s.id) +
                   (positives == 0 ? ": empty mask" : ": mask covers the whole image");
      continue;
    }
    try {
      const cam::CamMap<float> map = cam::normalize_cam(generator(s));
      per_sample[i] = sweep(map.values, s.mask);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }

  MethodEvaluation result;
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  std::vector<ThresholdRow> rows(kThresholdCount);
  const auto t = thresholds();
  for (std::size_t k = 0; k < kThresholdCount; ++k) rows[k].threshold = t[k];
  for (std::size_t i = 0; i < abnormal.size(); ++i) {
    if (!skipped[i].empty()) {
      result.diagnostics.push_back(skipped[i]);
      continue;
    }
    ++result.samples_used;
    for (std::size_t k = 0; k < kThresholdCount; ++k) {
      const Rates& r = per_sample[i].per_threshold[k].rates;
      rows[k].rates.sensitivity += r.sensitivity;
      rows[k].rates.specificity += r.specificity;
      rows[k].rates.precision += r.precision;
    }
  }
  if (result.samples_used == 0) throw DataError("evaluate_method: no abnormal samples to evaluate");
  const double used = static_cast<double>(result.samples_used);
  for (auto& row : rows) {
    row.rates.sensitivity /= used;
    row.rates.specificity /= used;
    row.rates.precision /= used;
    row.rates.fallout = 1.0 - row.rates.specificity;
  }
  result.metrics.per_threshold = std::move(rows);
  result.metrics.means = average(result.metrics.per_threshold);
  return result;
}

std::size_t argmax_row(const Tensor<float>& scores, std::size_t row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.dim(1); ++c) {
    if (scores.at(row, c) > scores.at(row, best)) best = c;
  }
  return best;
}

double classification_accuracy(const std::vector<sim::Sample>& samples,
                               const Classifier& classifier, std::size_t batch_size) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    std::vector<Tensor<float>> images;
    for (std::size_t i = start; i < end; ++i) images.push_back(samples[i].image);
    const Tensor<float> scores = classifier(stack<float>(images));
    for (std::size_t i = start; i < end; ++i) {
      correct += argmax_row(scores, i - start) == static_cast<std::size_t>(samples[i].label);
    }
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MethodMetrics>& methods) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "method,threshold,sensitivity,specificity,precision,fallout\n";
  auto line = [&out](const std::string& method, const std::string& t, const Rates& r) {
    out << method << ',' << t << ',' << format_double(r.sensitivity) << ','
        << format_double(r.specificity) << ',' << format_double(r.precision) << ','
        << format_double(r.fallout) << '\n';
  };
  for (const auto& m : methods) {
    for (const auto& row : m.metrics.per_threshold) {
      line(m.method, format_double(row.threshold), row.rates);
    }
    line(m.method, "mean", m.metrics.means);
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<MethodMetrics> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "method,threshold,sensitivity,specificity,precision,fallout") {
    throw DataError("unexpected metrics CSV header in " + path.string());
  }
  std::vector<MethodMetrics> out;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw DataError("metrics CSV row needs 6 columns: " + line);
    auto [it, inserted] = index.emplace(cells[0], out.size());
    if (inserted) out.push_back({cells[0], {}});
    MethodMetrics& m = out[it->second];
    const Rates r{parse_double(cells[2]), parse_double(cells[3]), parse_double(cells[4]),
                  parse_double(cells[5])};
    if (cells[1] == "mean") {
      m.metrics.means = r;
    } else {
      m.metrics.per_threshold.push_back({parse_double(cells[1]), r});
    }
  }
  return out;
}

}  // namespace hrcam::eval
