#include "specseg/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace specseg {

namespace {

template <class U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFFU);
  }
  out.write(bytes.data(), bytes.size());
}

template <class U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw FormatError("checkpoint truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const NetParams& params) {
  out.write("SSCK", 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, params.spec.digest());
  put_le<std::uint64_t>(out, params.count());
  for (const float v : params.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw FormatError("failed to write checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const NetParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, params);
}

NetParams read_checkpoint(std::istream& in, const NetSpec& spec) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SSCK", 4) != 0) throw FormatError("not an SSCK checkpoint");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto digest = get_le<std::uint64_t>(in);
  if (digest != spec.digest()) {
    throw FormatError("checkpoint was written for a different network (" + spec.describe() + ")");
  }
  NetParams params = zero_params<float>(spec);
  const auto count = get_le<std::uint64_t>(in);
  if (count != params.count()) throw FormatError("checkpoint parameter count mismatch");
  for (auto& v : params.values) v = std::bit_cast<float>(get_le<std::uint32_t>(in));
  return params;
}

NetParams load_checkpoint(const std::filesystem::path& path, const NetSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  return read_checkpoint(in, spec);
}

}  // namespace specseg
