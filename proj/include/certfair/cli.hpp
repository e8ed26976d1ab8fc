#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace certfair::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kFalsified = 2,
  kUndecided = 3,
  kIoError = 4,
  kSchemaError = 5,
  kGammaInfeasible = 6,
  kVerificationExhausted = 7,
};

// FNV-1a 64-bit hash of a file's bytes; throws DataIoError if unreadable.
std::uint64_t fnv1a_file(const std::string& path);

// args excludes the program name. Diagnostics go to err, results to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace certfair::cli
