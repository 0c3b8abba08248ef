#include "hrcam/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "hrcam/train.hpp"

namespace hrcam::pipeline {

double mean_pixel(const std::vector<sim::Sample>& samples) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : samples) {
    for (float v : s.image.data()) sum += static_cast<double>(v);
    count += s.image.size();
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

TrainedModel train(const std::vector<sim::Sample>& train_samples, const RunConfig& cfg,
                   const TrainProgress& progress) {
  cfg.validate();
  ModelSpec spec = cfg.model;
  spec.input_mean = mean_pixel(train_samples);
  auto report = [&progress](const char* phase) -> EpochCallback {
    if (!progress) return {};
    return [&progress, phase](std::size_t epoch, const TrainLog& log) {
      progress(phase, epoch, log);
    };
  };
  TrainedModel out;
  BackboneTraining phase1 =
      train_backbone(train_samples, spec, cfg.phase1,
                     build_model<float>(spec, cfg.phase1.seed).params, report("phase1"));
  HeadTraining phase2 =
      train_gap_head(train_samples, phase1.params, spec, phase1.taps, cfg.phase2,
                     make_head<float>(phase1.taps, spec.class_count), report("phase2"));
  out.model.spec = spec;
  out.model.taps = phase1.taps;
  out.model.params = std::move(phase1.params);
  out.model.head = std::move(phase2.head);
  out.model.has_head = true;
  out.phase1 = std::move(phase1.log);
  out.phase2 = std::move(phase2.log);
  out.backbone_checksum_before = phase2.backbone_checksum_before;
  out.backbone_checksum_after = phase2.backbone_checksum_after;
  return out;
}

void write_training_log(const std::filesystem::path& path, const TrainedModel& trained) {
  auto hex = [](std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << v;
    return s.str();
  };
  nlohmann::json log{
      {"phase1", {{"epoch_loss", trained.phase1.epoch_loss},
                  {"epoch_accuracy", trained.phase1.epoch_accuracy}}},
      {"phase2",
       {{"epoch_loss", trained.phase2.epoch_loss},
        {"epoch_accuracy", trained.phase2.epoch_accuracy},
        {"backbone_checksum_before", hex(trained.backbone_checksum_before)},
        {"backbone_checksum_after", hex(trained.backbone_checksum_after)},
        {"backbone_frozen", trained.backbone_checksum_before == trained.backbone_checksum_after}}},
      {"tap_channels", trained.model.taps.channels},
      {"head_inputs", trained.model.taps.total_channels()}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << log.dump(2) << '\n';
}

cam::CamMap<float> make_cam(const ModelFile& model, const Tensor<float>& image,
                            cam::Method method, std::size_t class_id,
                            std::optional<std::size_t> gradcam_tap) {
  switch (method) {
    case cam::Method::hrcam:
      if (!model.has_head) throw InvalidInput("model file has no GAP head; cannot draw HR-CAM");
      return cam::hrcam(image, model.params, model.spec, model.taps, model.head, class_id);
    case cam::Method::zhou:
      return cam::zhou_cam(image, model.params, model.spec, class_id);
    case cam::Method::gradcam:
      return cam::grad_cam(image, model.params, model.spec, class_id, gradcam_tap);
  }
  throw InvalidInput("unknown CAM method");
}

EvaluationReport evaluate(const ModelFile& model, const std::vector<sim::Sample>& test,
                          const CamConfig& cam_cfg) {
  EvaluationReport report;
  for (const auto& s : test) report.abnormal_samples += s.label == sim::Label::abnormal;
  if (report.abnormal_samples == 0) throw DataError("no abnormal test samples to evaluate");

  for (cam::Method method : cam_cfg.methods) {
    const eval::MethodEvaluation e = eval::evaluate_method(test, [&](const sim::Sample& s) {
      return make_cam(model, s.image, method, cam_cfg.class_id, cam_cfg.gradcam_tap);
    });
    report.methods.push_back({cam::to_string(method), e.metrics});
    for (const auto& d : e.diagnostics) report.diagnostics.push_back(cam::to_string(method) + ": " + d);
  }

  report.backbone_accuracy = eval::classification_accuracy(test, [&](const Tensor<float>& x) {
    return predict_backbone(x, model.params, model.spec);
  });
  if (model.has_head) {
    report.head_accuracy = eval::classification_accuracy(test, [&](const Tensor<float>& x) {
      return predict(x, model.params, model.spec, model.taps, model.head);
    });
  }
  return report;
}

void write_evaluation(const std::filesystem::path& dir, const EvaluationReport& report,
                      const nlohmann::json& config_echo) {
  std::filesystem::create_directories(dir);
  eval::write_metrics_csv(dir / "metrics.csv", report.methods);
  nlohmann::json means = nlohmann::json::object();
  for (const auto& m : report.methods) {
    means[m.method] = {{"sensitivity", m.metrics.means.sensitivity},
                       {"specificity", m.metrics.means.specificity},
                       {"precision", m.metrics.means.precision},
                       {"fallout", m.metrics.means.fallout}};
  }
  nlohmann::json summary{{"accuracy", {{"backbone", report.backbone_accuracy},
                                       {"gap_head", report.head_accuracy}}},
                         {"abnormal_test_samples", report.abnormal_samples},
                         {"means", means},
                         {"diagnostics", report.diagnostics},
                         {"config", config_echo}};
  std::ofstream out(dir / "summary.json");
  if (!out) throw DataError("cannot write summary.json");
  out << summary.dump(2) << '\n';
}

OrderingCheck compare_ordering(const std::vector<eval::MethodMetrics>& methods) {
  auto find = [&](const std::string& name) -> const eval::Rates& {
    for (const auto& m : methods) {
      if (m.method == name) return m.metrics.means;
    }
    throw DataError("metrics have no rows for method '" + name + "'");
  };
  const eval::Rates& hr = find("hrcam");
  const eval::Rates& gc = find("gradcam");
  const eval::Rates& zh = find("zhou");

  OrderingCheck check;
  auto record = [&check](const char* name, double a, double b, double c, bool higher_better) {
    const bool ok = higher_better ? (a >= b && b >= c) : (a <= b && b <= c);
    std::ostringstream line;
    line << (ok ? "PASS " : "FAIL ") << name << ": hrcam " << a << (higher_better ? " >= " : " <= ")
         << "gradcam " << b << (higher_better ? " >= " : " <= ") << "zhou " << c;
    check.lines.push_back(line.str());
    check.holds = check.holds && ok;
  };
  record("sensitivity", hr.sensitivity, gc.sensitivity, zh.sensitivity, true);
  record("specificity", hr.specificity, gc.specificity, zh.specificity, true);
  record("precision", hr.precision, gc.precision, zh.precision, true);
  record("fallout", hr.fallout, gc.fallout, zh.fallout, false);
  return check;
}

}  // namespace hrcam::pipeline
