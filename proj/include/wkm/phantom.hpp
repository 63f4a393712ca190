#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

namespace wkm {

/// Ground coordinate of the center of cell `i` on a grid of `side` cells over
/// [-1, 1]. Exactly antisymmetric: grid_coordinate(i) == -grid_coordinate(side - 1 - i).
inline double grid_coordinate(std::size_t i, std::size_t side) noexcept {
  return (2.0 * static_cast<double>(i) + 1.0 - static_cast<double>(side)) / static_cast<double>(side);
}

/// Cubic density grid spanning [-1, 1]^3, indexed (x, y, z) with x fastest.
class Volume {
 public:
  Volume() = default;
  Volume(std::size_t side, std::vector<double> data);

  std::size_t side() const noexcept { return side_; }
  double voxel_size() const noexcept { return 2.0 / static_cast<double>(side_); }

  double operator()(std::size_t x, std::size_t y, std::size_t z) const {
    return data_[(z * side_ + y) * side_ + x];
  }
  std::span<const double> data() const noexcept { return data_; }

  /// Sum of voxel values.
  double mass() const noexcept;

  double coordinate(std::size_t i) const noexcept { return grid_coordinate(i, side_); }

 private:
  std::size_t side_ = 0;
  std::vector<double> data_;
};

struct GaussianBlob {
  std::array<double, 3> center{};
  std::array<double, 3> widths{};
  double weight = 0.0;
};

struct PhantomSpec {
  std::vector<GaussianBlob> blobs;
  std::size_t side = 64;
};

/// Sum of anisotropic Gaussians sampled at voxel centers, zero outside the unit ball.
Volume load_phantom(const PhantomSpec& spec);

/// Parses the JSON form: a list of {"center": [3], "widths": [3], "weight": w}.
PhantomSpec parse_phantom_spec(const nlohmann::json& blobs, std::size_t side);
PhantomSpec read_phantom_spec(const std::filesystem::path& path, std::size_t side);

}  // namespace wkm
