#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "wkm/image.hpp"
#include "wkm/orientation.hpp"
#include "wkm/phantom.hpp"

namespace wkm {

/// A stack of noisy projections with ground-truth orientations. Pixel values are
/// float-representable so the in-memory set matches its on-disk form exactly.
struct ProjectionSet {
  std::size_t size = 0;
  double snr = 0.0;  // 0 means noiseless
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::vector<Image> images;
  std::vector<Image> clean;  // empty when not retained
  std::vector<Orientation> orientations;
  nlohmann::json volume_info = nlohmann::json::object();

  std::size_t count() const noexcept { return images.size(); }
  double pixel_size() const noexcept { return pixel_size_for(size); }
  bool has_clean() const noexcept { return !clean.empty(); }
};

/// Independent generator for one (seed, image index, stream) triple.
std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t index, std::uint32_t stream);

/// Projects `n` uniformly oriented views and adds noise at a stack-global SNR.
/// Parallel over images; the result does not depend on the thread count.
ProjectionSet generate_dataset(const Volume& volume, std::size_t n, std::size_t size, double snr,
                               std::uint64_t seed, bool keep_clean = true);

/// Writes meta.json, images.f32 and (if retained) clean.f32 into `dir`.
void save_dataset(const ProjectionSet& set, const std::filesystem::path& dir);
ProjectionSet load_dataset(const std::filesystem::path& dir);

/// Raw little-endian float32 stack, image-major, row-major within an image.
void write_f32_stack(const std::filesystem::path& path, std::span<const Image> images);
std::vector<Image> read_f32_stack(const std::filesystem::path& path, std::size_t count, std::size_t size);

/// Rounds every pixel to the nearest float.
void round_to_float(Image& image);

}  // namespace wkm
