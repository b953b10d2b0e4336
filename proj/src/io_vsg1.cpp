#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "vsglight/io.h"

namespace vsg {

namespace {

constexpr char kMagic[4] = {'V', 'S', 'G', '1'};
constexpr size_t kHeaderBytes = 4 + 3 * 4 + 6 * 4;  // magic, dims, corner + extent
constexpr size_t kRecordBytes = 8 * 4;

uint32_t read_u32le(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

float read_f32le(const unsigned char* p) {
  uint32_t u = read_u32le(p);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

void push_u32le(std::vector<unsigned char>& out, uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 24) & 0xff);
}

void push_f32le(std::vector<unsigned char>& out, double v) {
  float f = float(v);
  uint32_t u;
  std::memcpy(&u, &f, 4);
  push_u32le(out, u);
}

[[noreturn]] void fail(const std::string& path, size_t offset, const std::string& what) {
  throw ValidationError(path + ": " + what + " (byte " + std::to_string(offset) + ")");
}

}  // namespace

VsgVolume read_vsg1(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < kHeaderBytes)
    fail(path, bytes.size(), "truncated VSG1 header, need " + std::to_string(kHeaderBytes) +
                                 " bytes, have " + std::to_string(bytes.size()));
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(path, 0, "bad magic, expected \"VSG1\"");

  const uint32_t nx = read_u32le(&bytes[4]);
  const uint32_t ny = read_u32le(&bytes[8]);
  const uint32_t nz = read_u32le(&bytes[12]);
  if (nx < 1 || ny < 1 || nz < 1) fail(path, 4, "volume dimensions must be at least 1");
  if (uint64_t(nx) * ny * nz > (uint64_t(1) << 31))
    fail(path, 4, "volume dimensions overflow the record count");

  AABB bounds;
  for (int a = 0; a < 3; ++a) {
    bounds.min[a] = double(read_f32le(&bytes[16 + 4 * a]));
    double extent = double(read_f32le(&bytes[28 + 4 * a]));
    if (!(extent > 0.0)) fail(path, 28 + 4 * a, "volume extent must be positive");
    bounds.max[a] = bounds.min[a] + extent;
  }

  const int64_t count = int64_t(nx) * ny * nz;
  const size_t need = kHeaderBytes + size_t(count) * kRecordBytes;
  if (bytes.size() != need)
    fail(path, bytes.size(),
         "expected " + std::to_string(need) + " bytes for " + std::to_string(count) +
             " voxel records, have " + std::to_string(bytes.size()));

  VsgVolume vol = VsgVolume::zeros(int(nx), int(ny), int(nz), bounds);
  for (int64_t i = 0; i < count; ++i) {
    const size_t off = kHeaderBytes + size_t(i) * kRecordBytes;
    double rec[8];
    for (int c = 0; c < 8; ++c) rec[c] = double(read_f32le(&bytes[off + 4 * c]));
    const std::string voxel = "voxel " + std::to_string(i);
    if (!(rec[kChAlpha] >= 0.0 && rec[kChAlpha] <= 1.0))
      fail(path, off, voxel + " opacity outside [0, 1]");
    for (int c = kChColorR; c <= kChColorB; ++c)
      if (!(rec[c] >= 0.0) || !std::isfinite(rec[c]))
        fail(path, off + 4 * c, voxel + " color must be finite and nonnegative");
    for (int c = kChAxisX; c <= kChAxisZ; ++c)
      if (!std::isfinite(rec[c])) fail(path, off + 4 * c, voxel + " lobe axis must be finite");
    if (!(rec[kChSigmaRaw] > 1e-3))
      fail(path, off + 4 * kChSigmaRaw, voxel + " bandwidth must exceed 1e-3");

    double* d = &vol.data[i * kVolumeChannels];
    d[kChAlpha] = rec[kChAlpha];
    for (int c = kChColorR; c <= kChAxisZ; ++c) d[c] = rec[c];
    d[kChSigmaRaw] = raw_from_sigma(rec[kChSigmaRaw]);
  }
  return vol;
}

void write_vsg1(const std::string& path, const VsgVolume& volume) {
  volume.validate();
  std::vector<unsigned char> bytes;
  bytes.reserve(kHeaderBytes + size_t(volume.voxel_count()) * kRecordBytes);
  bytes.insert(bytes.end(), kMagic, kMagic + 4);
  push_u32le(bytes, uint32_t(volume.nx));
  push_u32le(bytes, uint32_t(volume.ny));
  push_u32le(bytes, uint32_t(volume.nz));
  for (int a = 0; a < 3; ++a) push_f32le(bytes, volume.bounds.min[a]);
  Vec3 extent = volume.bounds.extent();
  for (int a = 0; a < 3; ++a) push_f32le(bytes, extent[a]);

  for (int64_t i = 0; i < volume.voxel_count(); ++i) {
    const double* d = &volume.data[i * kVolumeChannels];
    for (int c = 0; c < kChSigmaRaw; ++c) push_f32le(bytes, d[c]);
    push_f32le(bytes, sigma_from_raw(d[kChSigmaRaw]));
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw ValidationError("failed writing " + path);
}

}  // namespace vsg
