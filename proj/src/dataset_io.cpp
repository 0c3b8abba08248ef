#include "hrcam/dataset_io.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "hrcam/config.hpp"
#include "hrcam/pgm.hpp"
#include "hrcam/tensor_io.hpp"

namespace hrcam::io {
namespace {

using nlohmann::json;
constexpr const char* kFormat = "hrcam-dataset-1";

std::string sample_dir(std::size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "samples/%06zu", id);
  return buf;
}

json write_sample(const std::filesystem::path& root, const sim::Sample& s,
                  const char* split, bool tensors) {
  const std::string rel = sample_dir(s.id);
  std::filesystem::create_directories(root / rel);
  json entry{{"id", s.id},
             {"split", split},
             {"label", static_cast<int>(s.label)},
             {"image", rel + "/image.pgm"},
             {"mask", rel + "/mask.pgm"}};
  write_pgm(root / rel / "image.pgm", to_gray(s.image, 65535));
  write_pgm(root / rel / "mask.pgm", to_gray(s.mask.to_tensor(), 255));
  if (tensors) {
    save_tensor(root / rel / "image.hrt", s.image);
    entry["image_tensor"] = rel + "/image.hrt";
  }
  return entry;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const sim::Dataset& data,
                   const sim::SimConfig& cfg, bool tensors) {
  std::filesystem::create_directories(dir);
  json manifest{{"format", kFormat}, {"config", cfg}, {"tensors", tensors}};
  json samples = json::array();
  for (const auto& s : data.train) samples.push_back(write_sample(dir, s, "train", tensors));
  for (const auto& s : data.test) samples.push_back(write_sample(dir, s, "test", tensors));
  manifest["samples"] = std::move(samples);
  manifest["counts"] = {{"train", data.train.size()}, {"test", data.test.size()}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

StoredDataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("no manifest.json in " + dir.string());
  StoredDataset out;
  try {
    const json manifest = json::parse(in);
    if (manifest.value("format", "") != kFormat) {
      throw DataError("unknown dataset format in " + dir.string());
    }
    sim::from_json(manifest.at("config"), out.config);
    for (const auto& e : manifest.at("samples")) {
      sim::Sample s;
      s.id = e.at("id").get<std::size_t>();
      const int label = e.at("label").get<int>();
      if (label != 0 && label != 1) throw DataError("bad label for sample " + std::to_string(s.id));
      s.label = static_cast<sim::Label>(label);
      const GrayImage mask = read_pgm(dir / e.at("mask").get<std::string>());
      s.mask = BinaryMap::from_tensor(from_gray(mask));
      if (e.contains("image_tensor") &&
          std::filesystem::exists(dir / e.at("image_tensor").get<std::string>())) {
        s.image = load_tensor<float>(dir / e.at("image_tensor").get<std::string>());
      } else {
        const Tensor<float> img = from_gray(read_pgm(dir / e.at("image").get<std::string>()));
        s.image = img.reshaped({1, img.dim(0), img.dim(1)});
      }
      if (s.image.rank() != 3 || s.image.dim(1) != s.mask.height || s.image.dim(2) != s.mask.width) {
        throw DataError("image/mask size mismatch for sample " + std::to_string(s.id));
      }
      const std::string split = e.at("split").get<std::string>();
      if (split == "train") out.data.train.push_back(std::move(s));
      else if (split == "test") out.data.test.push_back(std::move(s));
      else throw DataError("unknown split '" + split + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad manifest in " + dir.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError("bad manifest config in " + dir.string() + ": " + e.what());
  }
  return out;
}

}  // namespace hrcam::io
