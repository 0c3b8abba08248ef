#pragma once

// Dataset directory:
//   manifest.json                 config echo, split assignment, per-sample
//                                 label and file names
//   samples/<id>/image.pgm        16-bit P5, value / 65535
//   samples/<id>/mask.pgm         8-bit P5, 0 or 255
//   samples/<id>/image.hrt        optional exact HRT1 copy of the image

#include <filesystem>

#include "hrcam/simdata.hpp"

namespace hrcam::io {

struct StoredDataset {
  sim::SimConfig config;
  sim::Dataset data;
};

/// Creates `dir` if needed. With `tensors`, also writes exact HRT1 images,
/// which read_dataset prefers over the quantized PGMs.
void write_dataset(const std::filesystem::path& dir, const sim::Dataset& data,
                   const sim::SimConfig& cfg, bool tensors = false);

/// Throws DataError on a missing or malformed manifest or sample file.
StoredDataset read_dataset(const std::filesystem::path& dir);

}  // namespace hrcam::io
