#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "wkm/error.hpp"
#include "wkm/image.hpp"
#include "wkm/phantom.hpp"

namespace wkm::test {

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("wkm_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Image random_image(std::size_t size, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(size);
  for (double& v : img.pixels()) v = u(rng);
  return img;
}

/// Nonnegative unit-mass image with strictly positive pixels.
inline Image random_density(std::size_t size, std::mt19937_64& rng) {
  return random_image(size, rng, 0.05, 1.0).normalized();
}

/// Unit-mass density supported on the pixels whose centers lie in the unit disc.
inline Image random_disc_density(std::size_t size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Image img(size);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const double x = grid_coordinate(c, size), y = grid_coordinate(r, size);
      if (x * x + y * y <= 1.0) img(r, c) = u(rng);
    }
  }
  return img.normalized();
}

inline Image gaussian_image(std::size_t size, double cx, double cy, double width, double amplitude = 1.0) {
  Image img(size);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const double dx = grid_coordinate(c, size) - cx, dy = grid_coordinate(r, size) - cy;
      img(r, c) = amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
    }
  }
  return img;
}

inline double l2_diff(const Image& a, const Image& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    const double d = a.pixels()[i] - b.pixels()[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline double l2_norm(const Image& a) { return std::sqrt(a.squared_norm()); }

/// Three groups of images that differ strongly from group to group: a disc,
/// a bar and a ring, each perturbed by small noise. Labels are 0, 1, 2.
struct ToySet {
  std::vector<Image> images;
  std::vector<int> labels;
};

inline ToySet three_blob_set(std::size_t per_group, std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.02);
  ToySet set;
  for (int g = 0; g < 3; ++g) {
    for (std::size_t i = 0; i < per_group; ++i) {
      Image img(size);
      for (std::size_t r = 0; r < size; ++r) {
        for (std::size_t c = 0; c < size; ++c) {
          const double x = grid_coordinate(c, size), y = grid_coordinate(r, size);
          const double rad = std::hypot(x, y);
          double v = 0.0;
          if (g == 0) v = std::exp(-rad * rad / (2.0 * 0.15 * 0.15));
          if (g == 1) v = std::exp(-(x * x) / (2.0 * 0.08 * 0.08) - (y * y) / (2.0 * 0.5 * 0.5));
          if (g == 2) v = std::exp(-(rad - 0.6) * (rad - 0.6) / (2.0 * 0.07 * 0.07));
          img(r, c) = v + noise(rng);
        }
      }
      set.images.push_back(std::move(img));
      set.labels.push_back(g);
    }
  }
  return set;
}

template <class F>
Errc error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected a wkm::Error");
}

}  // namespace wkm::test
