#include "wkm/phantom.hpp"

#include "wkm/error.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

namespace wkm {

Volume::Volume(std::size_t side, std::vector<double> data) : side_(side), data_(std::move(data)) {
  if (data_.size() != side * side * side) {
    throw Error(Errc::shape, "volume of side " + std::to_string(side) + " needs " +
                                 std::to_string(side * side * side) + " voxels, got " +
                                 std::to_string(data_.size()));
  }
}

double Volume::mass() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

namespace {

void validate(const PhantomSpec& spec) {
  if (spec.side < 8) throw Error(Errc::invalid_spec, "volume side must be at least 8");
  if (spec.blobs.empty()) throw Error(Errc::invalid_spec, "phantom needs at least one blob");
  for (std::size_t b = 0; b < spec.blobs.size(); ++b) {
    const auto& blob = spec.blobs[b];
    const std::string where = "blob " + std::to_string(b);
    const double r2 = blob.center[0] * blob.center[0] + blob.center[1] * blob.center[1] +
                      blob.center[2] * blob.center[2];
    if (!(r2 < 1.0)) throw Error(Errc::invalid_spec, where + ": center outside the open unit ball");
    for (double w : blob.widths) {
      if (!(w > 0.0)) throw Error(Errc::invalid_spec, where + ": widths must be positive");
    }
    if (!(blob.weight > 0.0)) throw Error(Errc::invalid_spec, where + ": weight must be positive");
  }
}

}  // namespace

Volume load_phantom(const PhantomSpec& spec) {
  validate(spec);
  const std::size_t side = spec.side;
  std::vector<double> data(side * side * side, 0.0);

  for (std::size_t z = 0; z < side; ++z) {
    const double pz = grid_coordinate(z, side);
    for (std::size_t y = 0; y < side; ++y) {
      const double py = grid_coordinate(y, side);
      for (std::size_t x = 0; x < side; ++x) {
        const double px = grid_coordinate(x, side);
        if (px * px + py * py + pz * pz > 1.0) continue;
        double v = 0.0;
        for (const auto& blob : spec.blobs) {
          const double dx = (px - blob.center[0]) / blob.widths[0];
          const double dy = (py - blob.center[1]) / blob.widths[1];
          const double dz = (pz - blob.center[2]) / blob.widths[2];
          v += blob.weight * std::exp(-0.5 * (dx * dx + dy * dy + dz * dz));
        }
        data[(z * side + y) * side + x] = v;
      }
    }
  }
  return Volume(side, std::move(data));
}

PhantomSpec parse_phantom_spec(const nlohmann::json& blobs, std::size_t side) {
  if (!blobs.is_array()) throw Error(Errc::invalid_spec, "phantom spec must be a JSON list of blobs");
  PhantomSpec spec;
  spec.side = side;
  try {
    for (const auto& entry : blobs) {
      for (const auto& [key, value] : entry.items()) {
        if (key != "center" && key != "widths" && key != "weight") {
          throw Error(Errc::invalid_spec, "unknown blob key '" + key + "'");
        }
      }
      GaussianBlob blob;
      blob.center = entry.at("center").get<std::array<double, 3>>();
      blob.widths = entry.at("widths").get<std::array<double, 3>>();
      blob.weight = entry.at("weight").get<double>();
      spec.blobs.push_back(blob);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_spec, e.what());
  }
  validate(spec);
  return spec;
}

PhantomSpec read_phantom_spec(const std::filesystem::path& path, std::size_t side) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open phantom spec " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_spec, path.string() + ": " + e.what());
  }
  return parse_phantom_spec(doc, side);
}

}  // namespace wkm
