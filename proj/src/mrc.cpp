#include "wkm/mrc.hpp"

#include "wkm/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace wkm {

namespace {

static_assert(std::endian::native == std::endian::little, "MRC I/O assumes a little-endian host");

constexpr std::size_t kHeaderBytes = 1024;

// Word offsets into the 256-word header.
enum Word : std::size_t {
  kNx = 0, kNy = 1, kNz = 2, kMode = 3,
  kMx = 7, kMy = 8, kMz = 9,
  kCellA = 10, kCellB = 13,
  kMapC = 16, kMapR = 17, kMapS = 18,
  kDmin = 19, kDmax = 20, kDmean = 21,
  kIspg = 22, kNsymbt = 23,
  kExtType = 26, kNversion = 27,
  kMap = 52, kMachst = 53, kRms = 54, kNlabl = 55,
};

struct Header {
  std::array<std::uint8_t, kHeaderBytes> bytes{};

  std::int32_t i32(std::size_t word) const {
    std::int32_t v;
    std::memcpy(&v, bytes.data() + 4 * word, 4);
    return v;
  }
  void set_i32(std::size_t word, std::int32_t v) { std::memcpy(bytes.data() + 4 * word, &v, 4); }
  void set_f32(std::size_t word, float v) { std::memcpy(bytes.data() + 4 * word, &v, 4); }
  void set_text(std::size_t word, const char (&text)[5]) { std::memcpy(bytes.data() + 4 * word, text, 4); }
};

}  // namespace

Volume load_mrc(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  Header h;
  if (!in.read(reinterpret_cast<char*>(h.bytes.data()), kHeaderBytes)) {
    throw Error(Errc::io, path.string() + ": truncated header");
  }
  const std::int32_t nx = h.i32(kNx), ny = h.i32(kNy), nz = h.i32(kNz);
  const std::int32_t mode = h.i32(kMode);
  if (mode != 2) throw Error(Errc::unsupported_mode, path.string() + ": mode " + std::to_string(mode) + ", only mode 2 is supported");
  if (nx <= 0 || nx != ny || ny != nz) {
    throw Error(Errc::unsupported_shape, path.string() + ": map is " + std::to_string(nx) + "x" +
                                             std::to_string(ny) + "x" + std::to_string(nz) + ", need a cube");
  }
  if (nx < 8) throw Error(Errc::unsupported_shape, path.string() + ": side " + std::to_string(nx) + " below 8");
  const std::int32_t mapc = h.i32(kMapC), mapr = h.i32(kMapR), maps = h.i32(kMapS);
  // Some writers leave the axis words zeroed; treat that as the standard order.
  const bool standard = (mapc == 1 && mapr == 2 && maps == 3) || (mapc == 0 && mapr == 0 && maps == 0);
  if (!standard) throw Error(Errc::unsupported_shape, path.string() + ": non-standard axis order");
  const std::int32_t nsymbt = h.i32(kNsymbt);
  if (nsymbt < 0) throw Error(Errc::io, path.string() + ": negative extended header size");
  in.seekg(static_cast<std::streamoff>(kHeaderBytes) + nsymbt);

  const std::size_t side = static_cast<std::size_t>(nx);
  const std::size_t count = side * side * side;
  std::vector<float> raw(count);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * sizeof(float)))) {
    throw Error(Errc::io, path.string() + ": truncated data, expected " + std::to_string(count) + " floats");
  }
  const float lo = *std::min_element(raw.begin(), raw.end());
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = static_cast<double>(raw[i]) - static_cast<double>(lo);
  return Volume(side, std::move(data));
}

void write_mrc(const std::filesystem::path& path, const Volume& volume) {
  const auto side = static_cast<std::int32_t>(volume.side());
  const auto values = volume.data();
  std::vector<float> raw(values.begin(), values.end());

  double lo = 0.0, hi = 0.0, mean = 0.0, rms = 0.0;
  if (!raw.empty()) {
    lo = *std::min_element(raw.begin(), raw.end());
    hi = *std::max_element(raw.begin(), raw.end());
    for (float v : raw) mean += v;
    mean /= static_cast<double>(raw.size());
    for (float v : raw) rms += (v - mean) * (v - mean);
    rms = std::sqrt(rms / static_cast<double>(raw.size()));
  }

  Header h;
  h.set_i32(kNx, side);
  h.set_i32(kNy, side);
  h.set_i32(kNz, side);
  h.set_i32(kMode, 2);
  h.set_i32(kMx, side);
  h.set_i32(kMy, side);
  h.set_i32(kMz, side);
  for (std::size_t a = 0; a < 3; ++a) {
    h.set_f32(kCellA + a, static_cast<float>(side));
    h.set_f32(kCellB + a, 90.0f);
  }
  h.set_i32(kMapC, 1);
  h.set_i32(kMapR, 2);
  h.set_i32(kMapS, 3);
  h.set_f32(kDmin, static_cast<float>(lo));
  h.set_f32(kDmax, static_cast<float>(hi));
  h.set_f32(kDmean, static_cast<float>(mean));
  h.set_i32(kIspg, 1);
  h.set_i32(kNsymbt, 0);
  h.set_text(kExtType, "MRCO");
  h.set_i32(kNversion, 20140);
  h.set_text(kMap, "MAP ");
  h.bytes[4 * kMachst] = 0x44;
  h.bytes[4 * kMachst + 1] = 0x44;
  h.set_f32(kRms, static_cast<float>(rms));
  h.set_i32(kNlabl, 0);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(h.bytes.data()), kHeaderBytes);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

}  // namespace wkm
