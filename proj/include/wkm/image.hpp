#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wkm {

/// Square N x N image, row-major. Row index is y, column index is x.
class Image {
 public:
  Image() = default;
  explicit Image(std::size_t size, double fill = 0.0);
  Image(std::size_t size, std::vector<double> pixels);

  std::size_t size() const noexcept { return size_; }
  std::size_t pixel_count() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t row, std::size_t col) { return data_[row * size_ + col]; }
  double operator()(std::size_t row, std::size_t col) const { return data_[row * size_ + col]; }

  std::span<double> pixels() noexcept { return data_; }
  std::span<const double> pixels() const noexcept { return data_; }

  double sum() const noexcept;
  double squared_norm() const noexcept;

  /// Returns a copy scaled to unit total mass.
  Image normalized() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<double> data_;
};

/// Ground-coordinate width of one pixel when the image spans [-1, 1]^2.
inline double pixel_size_for(std::size_t size) { return 2.0 / static_cast<double>(size); }

}  // namespace wkm
