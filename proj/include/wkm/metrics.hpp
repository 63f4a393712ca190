#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "wkm/image.hpp"
#include "wkm/wavelet.hpp"

namespace wkm {

enum class Metric { l2, wemd };

/// Accepts "l2" and "wemd".
Metric parse_metric(std::string_view name);
std::string_view metric_name(Metric metric);

/// In-plane angles 2 pi r / m for r in [0, m).
class RotationGrid {
 public:
  explicit RotationGrid(int count = 200);

  int count() const noexcept { return static_cast<int>(angles_.size()); }
  double angle(int r) const { return angles_.at(static_cast<std::size_t>(r)); }
  std::span<const double> angles() const noexcept { return angles_; }
  /// Index of the angle that undoes rotation r.
  int inverse(int r) const noexcept { return (count() - r) % count(); }

 private:
  std::vector<double> angles_;
};

/// Counter-clockwise rotation about ((N-1)/2, (N-1)/2) with bilinear
/// interpolation and zero fill. theta == 0 returns an exact copy.
Image rotate_image(const Image& image, double theta);

/// l2: pixel_size * ||a - b||_2. wemd: approx_w1 of the two pyramids.
double base_distance(Metric metric, const Image& a, const Image& b, double pixel_size,
                     const WaveletConfig& wavelet = {});

/// Rotated copies of one image over a RotationGrid, with their pyramids when
/// the metric is wemd. Copy 0 is the source itself.
class RotatedStack {
 public:
  RotatedStack(const Image& source, const RotationGrid& grid, Metric metric, double pixel_size,
               long source_id = -1, const WaveletConfig& wavelet = {});

  std::size_t count() const noexcept { return copies_.size(); }
  std::size_t image_size() const noexcept { return copies_.front().size(); }
  const Image& copy(int r) const { return copies_.at(static_cast<std::size_t>(r)); }
  const WaveletPyramid& pyramid(int r) const { return pyramids_.at(static_cast<std::size_t>(r)); }
  Metric metric() const noexcept { return metric_; }
  double pixel_size() const noexcept { return pixel_size_; }
  long source_id() const noexcept { return source_id_; }
  const WaveletConfig& wavelet() const noexcept { return wavelet_; }

 private:
  Metric metric_;
  double pixel_size_;
  long source_id_;
  WaveletConfig wavelet_;
  std::vector<Image> copies_;
  std::vector<WaveletPyramid> pyramids_;
};

struct RotinvResult {
  double distance = 0.0;
  int rotation = 0;
};

/// min over r of base_distance(fixed, rotated.copy(r)); ties go to the smallest r.
RotinvResult rotinv_distance(Metric metric, const RotatedStack& rotated, const Image& fixed);

/// min over in-plane rotations R of d(a, R b).
double rotinv_l2(const Image& a, const Image& b, int rotations, double pixel_size);
double rotinv_w1(const Image& a, const Image& b, int rotations, double pixel_size,
                 const WaveletConfig& wavelet = {});

/// Flat float32 representation of an image for bulk distance evaluation: raw
/// pixels for l2, band-weighted wavelet coefficients for wemd.
std::vector<float> embed(Metric metric, const Image& image, const WaveletConfig& wavelet = {});

/// Sum of |a_i - b_i| (wemd) or sum of (a_i - b_i)^2 (l2), accumulated in a
/// fixed order independent of threading.
double embedded_raw(Metric metric, const float* a, const float* b, std::size_t n);
/// embedded_raw(metric, rows[i], b, n) for each row, bit-identical to the single calls.
void embedded_raw_batch(Metric metric, const float* const* rows, std::size_t count, const float* b, std::size_t n,
                        double* out);

/// Base distance recovered from embeddings: pixel_size * raw (wemd) or
/// pixel_size * sqrt(raw) (l2).
inline double embedded_finish(Metric metric, double raw, double pixel_size) {
  return metric == Metric::l2 ? pixel_size * std::sqrt(raw) : pixel_size * raw;
}

}  // namespace wkm
