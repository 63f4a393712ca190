#include "wkm/image.hpp"

#include "wkm/error.hpp"

#include <numeric>
#include <string>

namespace wkm {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_spec: return "invalid spec";
    case Errc::invalid_argument: return "invalid argument";
    case Errc::shape: return "shape error";
    case Errc::io: return "I/O error";
    case Errc::unsupported_shape: return "unsupported shape";
    case Errc::unsupported_mode: return "unsupported mode";
    case Errc::degenerate_signal: return "degenerate signal";
    case Errc::unbalanced_input: return "unbalanced input";
    case Errc::domain: return "domain error";
    case Errc::size_cap: return "size cap exceeded";
    case Errc::invalid_k: return "invalid k";
    case Errc::data: return "data error";
  }
  return "error";
}

Image::Image(std::size_t size, double fill) : size_(size), data_(size * size, fill) {}

Image::Image(std::size_t size, std::vector<double> pixels) : size_(size), data_(std::move(pixels)) {
  if (data_.size() != size * size) {
    throw Error(Errc::shape, "expected " + std::to_string(size * size) + " pixels, got " +
                                 std::to_string(data_.size()));
  }
}

double Image::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Image::squared_norm() const noexcept {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return acc;
}

Image Image::normalized() const {
  const double total = sum();
  if (!(total > 0.0)) throw Error(Errc::degenerate_signal, "cannot normalize an image with non-positive mass");
  Image out = *this;
  for (double& v : out.data_) v /= total;
  return out;
}

}  // namespace wkm
