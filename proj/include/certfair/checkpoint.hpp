#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "certfair/network.hpp"

namespace certfair {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CheckpointFormat { kText, kBinary };

struct Checkpoint {
  NetworkSpec spec;
  Parameters params;
};

// Layout (both formats): header with layer sizes, activation tag, sensitive
// slice and version counter, then every weight matrix in layer order
// (row-major), then every bias vector in layer order. The binary format stores
// little-endian IEEE-754 doubles. See docs/formats.md.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt, CheckpointFormat format);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt,
                     CheckpointFormat format = CheckpointFormat::kText);

// Detects the format from the leading magic.
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace certfair
