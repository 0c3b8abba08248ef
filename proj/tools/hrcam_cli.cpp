// hrcam: generate the simulated dataset, train the two-phase model, draw
// class activation maps and run the localization evaluation.
//
// Exit codes: 0 success, 1 ordering check failed, 2 usage/config error,
// 3 data error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hrcam/config.hpp"
#include "hrcam/dataset_io.hpp"
#include "hrcam/parallel.hpp"
#include "hrcam/pgm.hpp"
#include "hrcam/pipeline.hpp"
#include "hrcam/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace hrcam;

namespace {

constexpr int kOk = 0;
constexpr int kOrderingFailed = 1;
constexpr int kUsage = 2;
constexpr int kData = 3;

RunConfig config_or_defaults(const std::string& path) {
  return path.empty() ? RunConfig::defaults() : load_run_config(path);
}

void echo_config(const fs::path& dir, const RunConfig& cfg) {
  fs::create_directories(dir);
  save_run_config(dir / "run_config.json", cfg);
}

std::vector<cam::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<cam::Method> out;
  for (const auto& n : names) {
    if (n == "all") {
      out = {cam::Method::hrcam, cam::Method::gradcam, cam::Method::zhou};
      continue;
    }
    out.push_back(cam::parse_method(n));
  }
  return out;
}

Tensor<float> load_image(const fs::path& path) {
  if (path.extension() == ".hrt") {
    Tensor<float> t = io::load_tensor<float>(path);
    if (t.rank() == 2) t = t.reshaped({1, t.dim(0), t.dim(1)});
    return t;
  }
  const io::GrayImage g = io::read_pgm(path);
  const Tensor<float> t = io::from_gray(g);
  return t.reshaped({1, t.dim(0), t.dim(1)});
}

void check_dataset_matches(const ModelSpec& spec, const sim::SimConfig& data_cfg) {
  if (spec.input_shape[1] != data_cfg.image_size || spec.input_shape[2] != data_cfg.image_size) {
    throw ConfigError("dataset images are " + std::to_string(data_cfg.image_size) +
                      " px but the model expects " + std::to_string(spec.input_shape[1]) + "x" +
                      std::to_string(spec.input_shape[2]));
  }
}

int cmd_default_config(const std::string& out) {
  const nlohmann::json j = RunConfig::defaults();
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    save_run_config(out, RunConfig::defaults());
  }
  return kOk;
}

int cmd_gen_data(const std::string& config, const std::string& out, bool tensors) {
  const RunConfig cfg = config_or_defaults(config);
  const fs::path dir = out.empty() ? fs::path(cfg.output_dir) / "data" : fs::path(out);
  const sim::Dataset data = sim::generate_dataset(cfg.sim);
  io::write_dataset(dir, data, cfg.sim, tensors);
  echo_config(dir, cfg);
  std::cout << "wrote " << data.train.size() << " train and " << data.test.size()
            << " test samples to " << dir.string() << '\n';
  return kOk;
}

int cmd_train(const std::string& config, const std::string& data_dir, const std::string& out) {
  const RunConfig cfg = config_or_defaults(config);
  const io::StoredDataset stored = io::read_dataset(data_dir);
  check_dataset_matches(cfg.model, stored.config);
  if (stored.data.train.empty()) throw DataError("dataset has no training samples");

  const auto t0 = std::chrono::steady_clock::now();
  const pipeline::TrainedModel trained = pipeline::train(
      stored.data.train, cfg, [&](const std::string& phase, std::size_t epoch, const TrainLog& log) {
        std::printf("%s epoch %zu: loss %.5f, accuracy %.4f\n", phase.c_str(), epoch + 1,
                    log.epoch_loss.back(), log.epoch_accuracy.back());
        std::fflush(stdout);
      });
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path model_path = out.empty() ? fs::path(cfg.output_dir) / "model.hrm" : fs::path(out);
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
  save_model(model_path, trained.model);
  pipeline::write_training_log(model_path.string() + ".log.json", trained);
  save_run_config(model_path.string() + ".config.json", cfg);

  std::printf("phase 1 loss %.5f -> %.5f over %zu epochs\n", trained.phase1.epoch_loss.front(),
              trained.phase1.epoch_loss.back(), trained.phase1.epoch_loss.size());
  std::printf("phase 2 loss %.5f -> %.5f over %zu epochs\n", trained.phase2.epoch_loss.front(),
              trained.phase2.epoch_loss.back(), trained.phase2.epoch_loss.size());
  std::printf("backbone frozen during phase 2: %s\n",
              trained.backbone_checksum_before == trained.backbone_checksum_after ? "yes" : "NO");
  std::printf("trained in %.1f s; model written to %s\n", secs, model_path.string().c_str());
  return kOk;
}

int cmd_cam(const std::string& model_path, const std::string& image, const std::string& data_dir,
            const std::string& split, std::size_t limit, const std::vector<std::string>& methods,
            std::size_t class_id, std::optional<std::size_t> layer, const std::string& out,
            bool raw) {
  const ModelFile model = load_model(model_path);
  const std::vector<cam::Method> chosen = parse_methods(methods);
  if (chosen.empty()) throw InvalidInput("no CAM method selected");
  if (image.empty() == data_dir.empty()) {
    throw InvalidInput("give exactly one of --image or --data");
  }

  struct Input {
    std::string name;
    Tensor<float> image;
    std::optional<BinaryMap> mask;
  };
  std::vector<Input> inputs;
  if (!image.empty()) {
    inputs.push_back({fs::path(image).stem().string(), load_image(image), std::nullopt});
  } else {
    const io::StoredDataset stored = io::read_dataset(data_dir);
    const auto& samples = split == "train" ? stored.data.train : stored.data.test;
    for (const auto& s : samples) {
      if (inputs.size() >= limit) break;
      char name[32];
      std::snprintf(name, sizeof name, "sample%06zu", s.id);
      inputs.push_back({name, s.image, s.mask});
    }
  }

  const fs::path dir(out);
  fs::create_directories(dir);
  std::size_t written = 0;
  for (const auto& in : inputs) {
    std::vector<Tensor<float>> panels{in.image.reshaped({in.image.dim(1), in.image.dim(2)})};
    if (in.mask) panels.push_back(in.mask->to_tensor());
    for (cam::Method m : chosen) {
      const cam::CamMap<float> raw_map = pipeline::make_cam(model, in.image, m, class_id, layer);
      const cam::CamMap<float> map = cam::normalize_cam(raw_map);
      const std::string stem = in.name + "_" + cam::to_string(m);
      io::write_pgm(dir / (stem + ".pgm"), io::to_gray(map.values));
      if (raw) io::save_tensor(dir / (stem + ".hrt"), raw_map.values);
      panels.push_back(map.values);
      ++written;
    }
    io::write_pgm(dir / (in.name + "_strip.pgm"), io::composite_strip(panels));
  }
  std::cout << "wrote " << written << " CAM maps for " << inputs.size() << " image(s) to "
            << dir.string() << '\n';
  return kOk;
}

int cmd_eval(const std::string& config, const std::string& model_path, const std::string& data_dir,
             const std::vector<std::string>& methods, const std::string& out) {
  RunConfig cfg = config_or_defaults(config);
  if (!methods.empty()) cfg.cam.methods = parse_methods(methods);
  const ModelFile model = load_model(model_path);
  const io::StoredDataset stored = io::read_dataset(data_dir);
  check_dataset_matches(model.spec, stored.config);

  const pipeline::EvaluationReport report = pipeline::evaluate(model, stored.data.test, cfg.cam);
  const fs::path dir = out.empty() ? fs::path(cfg.output_dir) / "eval" : fs::path(out);
  nlohmann::json echo = cfg;
  echo["model_file"] = model_path;
  echo["data_dir"] = data_dir;
  pipeline::write_evaluation(dir, report, echo);
  echo_config(dir, cfg);

  for (const auto& m : report.methods) {
    std::printf("%-8s sensitivity %.3f specificity %.3f precision %.3f fallout %.3f\n",
                m.method.c_str(), m.metrics.means.sensitivity, m.metrics.means.specificity,
                m.metrics.means.precision, m.metrics.means.fallout);
  }
  std::printf("accuracy: backbone %.4f, gap head %.4f (%zu abnormal test samples)\n",
              report.backbone_accuracy, report.head_accuracy, report.abnormal_samples);
  return kOk;
}

int cmd_compare(const std::string& csv) {
  const auto methods = eval::read_metrics_csv(csv);
  const pipeline::OrderingCheck check = pipeline::compare_ordering(methods);
  for (const auto& line : check.lines) std::cout << line << '\n';
  std::cout << (check.holds ? "ordering holds\n" : "ordering violated\n");
  return check.holds ? kOk : kOrderingFailed;
}

int cmd_run(const std::string& config, const std::string& out, bool tensors) {
  RunConfig cfg = config_or_defaults(config);
  if (!out.empty()) cfg.output_dir = out;
  const fs::path dir(cfg.output_dir);
  echo_config(dir, cfg);
  const std::string cfg_path = (dir / "run_config.json").string();
  if (int rc = cmd_gen_data(cfg_path, (dir / "data").string(), tensors); rc != kOk) return rc;
  if (int rc = cmd_train(cfg_path, (dir / "data").string(), (dir / "model.hrm").string()); rc != kOk) {
    return rc;
  }
  if (int rc = cmd_eval(cfg_path, (dir / "model.hrm").string(), (dir / "data").string(), {},
                        (dir / "eval").string());
      rc != kOk) {
    return rc;
  }
  return cmd_compare((dir / "eval" / "metrics.csv").string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-resolution class activation maps on simulated abnormality data"};
  app.require_subcommand(1);

  std::string config, out, data_dir, model_path, image, split = "test", csv;
  bool tensors = false, raw = false;
  std::size_t limit = 8, class_id = 1;
  std::optional<std::size_t> layer;
  std::vector<std::string> methods;

  auto* def = app.add_subcommand("default-config", "Print or write the default run config");
  def->add_option("--out", out, "Write to this file instead of stdout");

  auto* gen = app.add_subcommand("gen-data", "Generate the simulated dataset");
  gen->add_option("--config", config, "Run config JSON (defaults if omitted)");
  gen->add_option("--out", out, "Dataset directory (default <output_dir>/data)");
  gen->add_flag("--tensors", tensors, "Also write exact HRT1 image tensors");

  auto* train = app.add_subcommand("train", "Train backbone (phase 1) and GAP head (phase 2)");
  train->add_option("--config", config, "Run config JSON");
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--out", out, "Model file (default <output_dir>/model.hrm)");

  auto* camc = app.add_subcommand("cam", "Export normalized CAMs as PGM");
  camc->add_option("--model", model_path, "Model file")->required();
  camc->add_option("--image", image, "Single input image (.pgm or .hrt)");
  camc->add_option("--data", data_dir, "Dataset directory");
  camc->add_option("--split", split, "Dataset split")->check(CLI::IsMember({"train", "test"}));
  camc->add_option("--limit", limit, "Maximum number of dataset images");
  camc->add_option("--method", methods, "hrcam, zhou, gradcam or all (repeatable)")
      ->delimiter(',')
      ->required();
  camc->add_option("--class", class_id, "Class whose map is drawn");
  camc->add_option("--layer", layer, "Grad-CAM tap index (default: penultimate tap)");
  camc->add_option("--out", out, "Output directory")->required();
  camc->add_flag("--raw", raw, "Also dump the raw map as HRT1");

  auto* evalc = app.add_subcommand("eval", "Threshold-sweep localization evaluation");
  evalc->add_option("--config", config, "Run config JSON");
  evalc->add_option("--model", model_path, "Model file")->required();
  evalc->add_option("--data", data_dir, "Dataset directory")->required();
  evalc->add_option("--methods", methods, "Comma-separated CAM methods")->delimiter(',');
  evalc->add_option("--out", out, "Output directory (default <output_dir>/eval)");

  auto* cmp = app.add_subcommand("compare", "Check the method ordering in a metrics.csv");
  cmp->add_option("metrics", csv, "metrics.csv")->required();

  auto* run = app.add_subcommand("run", "gen-data, train, eval and compare in one go");
  run->add_option("--config", config, "Run config JSON");
  run->add_option("--out", out, "Output directory (overrides output_dir)");
  run->add_flag("--tensors", tensors, "Also write exact HRT1 image tensors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  configure_threads();
  try {
    if (*def) return cmd_default_config(out);
    if (*gen) return cmd_gen_data(config, out, tensors);
    if (*train) return cmd_train(config, data_dir, out);
    if (*camc) {
      return cmd_cam(model_path, image, data_dir, split, limit, methods, class_id, layer, out, raw);
    }
    if (*evalc) return cmd_eval(config, model_path, data_dir, methods, out);
    if (*cmp) {
      try {
        return cmd_compare(csv);
      } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
      }
    }
    if (*run) return cmd_run(config, out, tensors);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
