#pragma once

#include <stdexcept>
#include <string>

namespace dpcnn {

// Thrown on container/checkpoint files with a bad magic or version field.
struct VersionMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a file ends before its declared payload.
struct TruncatedFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a stored CRC32 does not match the payload.
struct ChecksumError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dpcnn
