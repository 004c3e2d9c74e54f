#include <zlib.h>

#include <fstream>

#include "dpcnn/dataset.hpp"
#include "dpcnn/errors.hpp"
#include "wire.hpp"

namespace dpcnn {

namespace wire {

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path);
  const std::streamsize len = in.tellg();
  in.seekg(0);
  std::vector<uint8_t> bytes(static_cast<size_t>(len));
  if (len > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), len))
    throw IoError("cannot read " + path);
  return bytes;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

}  // namespace wire

namespace {

constexpr char kMagic[9] = "DPCNNDS1";
constexpr uint32_t kVersion = 1;

uint32_t crc_of(const std::string& bytes) {
  return static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
            static_cast<uInt>(bytes.size())));
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& dataset) {
  const DatasetHeader& h = dataset.header;
  if (dataset.examples.size() != h.example_count)
    throw std::invalid_argument("save_dataset: header/example count mismatch");
  const size_t block = static_cast<size_t>(h.led_count) * h.height * h.width;

  std::string payload;
  payload.reserve(dataset.examples.size() * (block * 4 + 4));
  for (const SubImageStack& ex : dataset.examples) {
    if (ex.images.size() != block)
      throw std::invalid_argument("save_dataset: example block size mismatch");
    for (float v : ex.images) wire::put_f32(payload, v);
    wire::put_u32(payload, static_cast<uint32_t>(ex.label));
  }

  std::string out;
  out.append(kMagic, 8);
  wire::put_u32(out, kVersion);
  wire::put_u32(out, h.led_count);
  wire::put_u32(out, h.height);
  wire::put_u32(out, h.width);
  wire::put_u32(out, h.example_count);
  wire::put_u32(out, h.class_count);
  wire::put_f32(out, h.noise_reference);
  wire::put_f32(out, h.readout_sigma);
  wire::put_f32(out, h.sample_sigma);
  wire::put_u64(out, h.global_seed);
  wire::put_u32(out, h.amplitude_convention);
  wire::put_f32(out, h.refractive_index);
  wire::put_f32(out, h.max_thickness_um);
  wire::put_f32(out, h.wavelength_um);
  wire::put_f32(out, h.absorption_alpha);
  wire::put_u32(out, h.grid_side);
  wire::put_f32(out, h.grid_pitch_um);
  wire::put_f32(out, h.na);
  if (h.leds.size() != h.led_count)
    throw std::invalid_argument("save_dataset: header LED table size mismatch");
  for (const Led& led : h.leds) {
    wire::put_f32(out, static_cast<float>(led.sx));
    wire::put_f32(out, static_cast<float>(led.sy));
    wire::put_u8(out, led.bright_field ? 1 : 0);
    wire::put_u8(out, static_cast<uint8_t>(led.ring_index));
  }
  wire::put_u64(out, payload.size());
  wire::put_u32(out, crc_of(payload));
  out += payload;
  wire::write_file(path, out);
}

Dataset load_dataset(const std::string& path) {
  const std::vector<uint8_t> bytes = wire::read_file(path);
  wire::Reader r(bytes.data(), bytes.size(), "dataset " + path);
  if (r.remaining() < 8 || std::memcmp(r.cursor(), kMagic, 8) != 0)
    throw VersionMismatchError("dataset " + path + ": bad magic");
  r.skip(8);
  if (r.u32() != kVersion)
    throw VersionMismatchError("dataset " + path + ": unsupported version");

  Dataset d;
  DatasetHeader& h = d.header;
  h.version = kVersion;
  h.led_count = r.u32();
  h.height = r.u32();
  h.width = r.u32();
  h.example_count = r.u32();
  h.class_count = r.u32();
  h.noise_reference = r.f32();
  h.readout_sigma = r.f32();
  h.sample_sigma = r.f32();
  h.global_seed = r.u64();
  h.amplitude_convention = r.u32();
  h.refractive_index = r.f32();
  h.max_thickness_um = r.f32();
  h.wavelength_um = r.f32();
  h.absorption_alpha = r.f32();
  h.grid_side = r.u32();
  h.grid_pitch_um = r.f32();
  h.na = r.f32();
  h.leds.resize(h.led_count);
  for (Led& led : h.leds) {
    led.sx = r.f32();
    led.sy = r.f32();
    led.bright_field = r.u8() != 0;
    led.ring_index = r.u8();
  }
  const uint64_t payload_bytes = r.u64();
  const uint32_t stored_crc = r.u32();
  if (r.remaining() < payload_bytes)
    throw TruncatedFileError("dataset " + path + ": truncated payload");
  const uint32_t actual_crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(r.cursor()),
            static_cast<uInt>(payload_bytes)));
  if (actual_crc != stored_crc)
    throw ChecksumError("dataset " + path + ": payload checksum mismatch");

  const size_t block = static_cast<size_t>(h.led_count) * h.height * h.width;
  if (payload_bytes != static_cast<uint64_t>(h.example_count) * (block * 4 + 4))
    throw TruncatedFileError("dataset " + path + ": payload size mismatch");

  d.examples.resize(h.example_count);
  for (uint32_t e = 0; e < h.example_count; ++e) {
    SubImageStack& ex = d.examples[e];
    ex.led_count = static_cast<int>(h.led_count);
    ex.height = static_cast<int>(h.height);
    ex.width = static_cast<int>(h.width);
    ex.object_id = e;
    ex.seed = h.global_seed;
    ex.images.resize(block);
    for (size_t i = 0; i < block; ++i) ex.images[i] = r.f32();
    ex.label = static_cast<int>(r.u32());
  }
  return d;
}

}  // namespace dpcnn
