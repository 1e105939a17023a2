#include "causalmp/serialize.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "causalmp/error.hpp"

namespace causalmp {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'M', 'P', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw Error(ErrorCode::kFormat, "parameter file truncated");
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace

void save_tensors(const std::filesystem::path& path, std::span<const DenseMatrix* const> tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const DenseMatrix* t : tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t->rows()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t->cols()));
  }
  for (const DenseMatrix* t : tensors)
    for (double v : t->values()) put_le<double>(out, v);
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

std::vector<DenseMatrix> load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(ErrorCode::kFormat, path.string() + ": bad magic, expected CMP1");
  }
  const auto count = get_le<std::uint32_t>(in);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(count);
  for (auto& [r, c] : shapes) {
    r = get_le<std::uint32_t>(in);
    c = get_le<std::uint32_t>(in);
  }
  std::vector<DenseMatrix> tensors;
  tensors.reserve(count);
  for (const auto& [r, c] : shapes) {
    DenseMatrix m(r, c);
    for (double& v : m.values()) v = get_le<double>(in);
    tensors.push_back(std::move(m));
  }
  return tensors;
}

}  // namespace causalmp
