#include "hrcam/tensor_io.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

namespace hrcam::io {
namespace {

constexpr std::array<char, 4> kMagic{'H', 'R', 'T', '1'};
constexpr std::uint8_t kMaxRank = 8;

template <typename U>
void write_le(std::ostream& out, U v) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U read_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw DataError("unexpected end of tensor stream");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

template <typename T>
constexpr DType dtype_of() {
  return sizeof(T) == 4 ? DType::f32 : DType::f64;
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }

template <typename T>
void write_tensor(std::ostream& out, const Tensor<T>& t) {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  out.write(kMagic.data(), kMagic.size());
  out.put(static_cast<char>(dtype_of<T>()));
  out.put(static_cast<char>(t.rank()));
  for (auto e : t.shape()) write_le<std::uint64_t>(out, e);
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  for (T v : t.data()) write_le(out, std::bit_cast<Bits>(v));
}

template <typename T>
Tensor<T> read_tensor(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("bad tensor magic (expected HRT1)");
  }
  const int tag = in.get();
  const int rank = in.get();
  if (tag != 0 && tag != 1) throw DataError("unknown tensor dtype tag");
  if (rank < 1 || rank > kMaxRank) throw DataError("unsupported tensor rank");
  Shape shape(static_cast<std::size_t>(rank));
  for (auto& e : shape) {
    e = read_le<std::uint64_t>(in);
    if (e == 0 || e > (std::uint64_t{1} << 32)) throw DataError("bad tensor extent");
  }
  std::vector<T> data(shape_size(shape));
  for (auto& v : data) {
    if (tag == 0) {
      v = static_cast<T>(std::bit_cast<float>(read_le<std::uint32_t>(in)));
    } else {
      v = static_cast<T>(std::bit_cast<double>(read_le<std::uint64_t>(in)));
    }
  }
  return Tensor<T>(std::move(shape), std::move(data));
}

template <typename T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_tensor(out, t);
  if (!out) throw DataError("write failed: " + path.string());
}

template <typename T>
Tensor<T> load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_tensor<T>(in);
}

template void write_tensor(std::ostream&, const Tensor<float>&);
template void write_tensor(std::ostream&, const Tensor<double>&);
template Tensor<float> read_tensor(std::istream&);
template Tensor<double> read_tensor(std::istream&);
template void save_tensor(const std::filesystem::path&, const Tensor<float>&);
template void save_tensor(const std::filesystem::path&, const Tensor<double>&);
template Tensor<float> load_tensor(const std::filesystem::path&);
template Tensor<double> load_tensor(const std::filesystem::path&);

}  // namespace hrcam::io
