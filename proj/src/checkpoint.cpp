#include <zlib.h>

#include <cstring>

#include "dpcnn/dpcnn.hpp"
#include "dpcnn/errors.hpp"
#include "wire.hpp"

namespace dpcnn {
namespace {

constexpr char kMagic[9] = "DPCNNCK1";
constexpr uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<const Tensor<float>*>& tensors) {
  std::string payload;
  for (const Tensor<float>* t : tensors)
    for (float v : t->v) wire::put_f32(payload, v);

  std::string out;
  out.append(kMagic, 8);
  wire::put_u32(out, kVersion);
  wire::put_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const Tensor<float>* t : tensors) {
    wire::put_u32(out, static_cast<uint32_t>(t->ndim));
    for (int d = 0; d < 4; ++d) wire::put_u32(out, static_cast<uint32_t>(t->dims[d]));
  }
  wire::put_u64(out, payload.size());
  wire::put_u32(out, static_cast<uint32_t>(
                         crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
                               static_cast<uInt>(payload.size()))));
  out += payload;
  wire::write_file(path, out);
}

std::vector<Tensor<float>> load_checkpoint(const std::string& path) {
  const std::vector<uint8_t> bytes = wire::read_file(path);
  wire::Reader r(bytes.data(), bytes.size(), "checkpoint " + path);
  if (r.remaining() < 8 || std::memcmp(r.cursor(), kMagic, 8) != 0)
    throw VersionMismatchError("checkpoint " + path + ": bad magic");
  r.skip(8);
  if (r.u32() != kVersion)
    throw VersionMismatchError("checkpoint " + path + ": unsupported version");
  const uint32_t count = r.u32();
  std::vector<Tensor<float>> tensors(count);
  size_t total = 0;
  for (Tensor<float>& t : tensors) {
    t.ndim = static_cast<int>(r.u32());
    if (t.ndim < 1 || t.ndim > 4)
      throw VersionMismatchError("checkpoint " + path + ": bad tensor rank");
    size_t n = 1;
    for (int d = 0; d < 4; ++d) {
      t.dims[d] = static_cast<int>(r.u32());
      n *= static_cast<size_t>(std::max(1, t.dims[d]));
    }
    t.v.resize(n);
    total += n;
  }
  const uint64_t payload_bytes = r.u64();
  const uint32_t stored_crc = r.u32();
  if (payload_bytes != total * 4)
    throw TruncatedFileError("checkpoint " + path + ": payload size mismatch");
  if (r.remaining() < payload_bytes)
    throw TruncatedFileError("checkpoint " + path + ": truncated payload");
  const uint32_t actual = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(r.cursor()),
            static_cast<uInt>(payload_bytes)));
  if (actual != stored_crc)
    throw ChecksumError("checkpoint " + path + ": payload checksum mismatch");
  for (Tensor<float>& t : tensors)
    for (float& v : t.v) v = r.f32();
  return tensors;
}

void save_trial_checkpoint(const std::string& path, const std::vector<float>& w,
                           Cnn<float>& model) {
  Tensor<float> wt({static_cast<int>(w.size())});
  std::copy(w.begin(), w.end(), wt.v.begin());
  std::vector<const Tensor<float>*> tensors{&wt};
  for (const Tensor<float>* t : model.params()) tensors.push_back(t);
  save_checkpoint(path, tensors);
}

}  // namespace dpcnn
