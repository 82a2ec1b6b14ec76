#pragma once

// Binary checkpoint layout, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "SSCK"
//   4       4     u32 format version (1)
//   8       8     u64 NetSpec digest
//   16      8     u64 parameter count
//   24      4*n   parameters, IEEE-754 binary32, registry order

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "specseg/network.hpp"

namespace specseg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const NetParams& params);
void save_checkpoint(const std::filesystem::path& path, const NetParams& params);

/// Reads parameters for `spec`; throws FormatError when the file is
/// malformed or was written for a different NetSpec.
[[nodiscard]] NetParams read_checkpoint(std::istream& in, const NetSpec& spec);
[[nodiscard]] NetParams load_checkpoint(const std::filesystem::path& path, const NetSpec& spec);

}  // namespace specseg
