#include "dpcnn/idx.hpp"

#include <cstdint>
#include <fstream>

#include "dpcnn/errors.hpp"

namespace dpcnn {
namespace {

uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw TruncatedFileError("idx: truncated header in " + path);
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) |
         uint32_t(b[3]);
}

}  // namespace

IdxImages load_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("idx: cannot open " + path);
  if (read_be32(in, path) != 0x00000803u)
    throw VersionMismatchError("idx: not an idx3-ubyte image file: " + path);
  IdxImages out;
  out.count = static_cast<int>(read_be32(in, path));
  out.h = static_cast<int>(read_be32(in, path));
  out.w = static_cast<int>(read_be32(in, path));
  const size_t total = static_cast<size_t>(out.count) * out.h * out.w;
  std::vector<unsigned char> raw(total);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(total)))
    throw TruncatedFileError("idx: truncated pixel data in " + path);
  out.pixels.resize(total);
  for (size_t i = 0; i < total; ++i) out.pixels[i] = raw[i] / 255.0;
  return out;
}

std::vector<int> load_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("idx: cannot open " + path);
  if (read_be32(in, path) != 0x00000801u)
    throw VersionMismatchError("idx: not an idx1-ubyte label file: " + path);
  const size_t count = read_be32(in, path);
  std::vector<unsigned char> raw(count);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count)))
    throw TruncatedFileError("idx: truncated label data in " + path);
  return std::vector<int>(raw.begin(), raw.end());
}

}  // namespace dpcnn
