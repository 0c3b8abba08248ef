#pragma once

// HRT1 binary tensor format:
//   "HRT1" | u8 dtype (0 = f32, 1 = f64) | u8 rank | rank x u64 LE extents |
//   values, little-endian, row-major.

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "hrcam/tensor.hpp"

namespace hrcam::io {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

template <typename T>
void write_tensor(std::ostream& out, const Tensor<T>& t);

/// Reads either dtype and converts to T. Throws DataError on malformed input.
template <typename T>
Tensor<T> read_tensor(std::istream& in);

template <typename T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& t);

template <typename T>
Tensor<T> load_tensor(const std::filesystem::path& path);

// Little-endian scalar helpers shared by the model container.
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);

}  // namespace hrcam::io
