#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "wkm/image.hpp"

namespace wkm {

/// Symmetric Daubechies (symlet) order-5 analysis filters.
namespace sym5 {
inline constexpr std::array<double, 10> dec_lo = {
    0.027333068345077982, 0.029519490925774643, -0.039134249302383094, 0.1993975339773936,
    0.7234076904024206,   0.6339789634582119,   0.01660210576452232,   -0.17532808990845047,
    -0.021101834024758855, 0.019538882735286728};
inline constexpr std::array<double, 10> dec_hi = {
    -0.019538882735286728, -0.021101834024758855, 0.17532808990845047,  0.01660210576452232,
    -0.6339789634582119,   0.7234076904024206,    -0.1993975339773936,  -0.039134249302383094,
    -0.029519490925774643, 0.027333068345077982};
}  // namespace sym5

struct WaveletBand {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> coef;

  friend bool operator==(const WaveletBand&, const WaveletBand&) = default;
};

/// Signal extension at the borders: zero treats the image as a compactly
/// supported density; symmetric is half-sample mirroring (x1 x0 | x0 x1 ...).
enum class Boundary { zero, symmetric };

inline constexpr int kDefaultLevels = 6;

struct WaveletConfig {
  int levels = kDefaultLevels;
  Boundary boundary = Boundary::zero;
};

std::string_view boundary_name(Boundary boundary);
/// Accepts "zero" and "symmetric".
Boundary parse_boundary(std::string_view name);

/// Detail orientation. Horizontal is high-pass along rows (axis 0) and
/// low-pass along columns; vertical is the transpose; diagonal is high-pass in both.
enum class Detail { horizontal = 0, vertical = 1, diagonal = 2 };

/// Multi-level 2D wavelet decomposition. Level 1 is the finest.
class WaveletPyramid {
 public:
  int levels() const noexcept { return static_cast<int>(details_.size()); }
  int requested_levels() const noexcept { return requested_; }
  bool clamped() const noexcept { return levels() < requested_; }
  Boundary boundary() const noexcept { return boundary_; }

  const WaveletBand& detail(int level, Detail kind) const {
    return details_.at(static_cast<std::size_t>(level - 1))[static_cast<std::size_t>(kind)];
  }
  const WaveletBand& approximation() const noexcept { return approx_; }

  /// 2^(-2 (J - level)) for detail bands at `level`; the coarsest level and the
  /// approximation band weigh 1.
  double weight(int level) const;

  bool same_shape(const WaveletPyramid& other) const;
  std::size_t coefficient_count() const;

  /// All coefficients multiplied by their band weight, approximation first,
  /// then levels from coarsest to finest in horizontal, vertical, diagonal order.
  std::vector<double> weighted_coefficients() const;

 private:
  friend WaveletPyramid dwt2(const Image& image, int levels, Boundary boundary);

  int requested_ = 0;
  Boundary boundary_ = Boundary::zero;
  std::vector<std::array<WaveletBand, 3>> details_;
  WaveletBand approx_;
};

/// Number of decomposition levels actually applied to a size x size image: each
/// level must strictly shrink the band, so depth saturates once the band reaches
/// the filter's support.
int feasible_depth(std::size_t size, int requested);

/// Length of one level's output for an input of length n.
inline std::size_t dwt_output_length(std::size_t n) { return (n + sym5::dec_lo.size() - 1) / 2; }

/// Separable symlet-5 DWT.
WaveletPyramid dwt2(const Image& image, int levels = kDefaultLevels, Boundary boundary = Boundary::zero);
inline WaveletPyramid dwt2(const Image& image, const WaveletConfig& config) {
  return dwt2(image, config.levels, config.boundary);
}

/// Weighted l1 distance between wavelet coefficients, scaled by pixel_size so it
/// carries ground-distance units.
double approx_w1(const WaveletPyramid& a, const WaveletPyramid& b, double pixel_size);

}  // namespace wkm
