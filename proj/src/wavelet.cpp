#include "wkm/wavelet.hpp"

#include "wkm/error.hpp"

#include <cmath>
#include <string>

namespace wkm {

namespace {

constexpr std::size_t kTaps = sym5::dec_lo.size();

// Half-sample symmetric extension: ... x1 x0 | x0 x1 ... x(n-1) | x(n-1) x(n-2) ...
std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// One analysis step along a strided line: out[o] = sum_j f[j] x[2o + 1 - j].
void analyze_line(const double* in, std::size_t n, std::size_t in_stride, double* lo, double* hi,
                  std::size_t out_stride, Boundary boundary) {
  const std::size_t out_len = dwt_output_length(n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
  for (std::size_t o = 0; o < out_len; ++o) {
    double acc_lo = 0.0, acc_hi = 0.0;
    const auto base = static_cast<std::ptrdiff_t>(2 * o + 1);
    for (std::size_t j = 0; j < kTaps; ++j) {
      const std::ptrdiff_t at = base - static_cast<std::ptrdiff_t>(j);
      double x = 0.0;
      if (at >= 0 && at < sn) {
        x = in[static_cast<std::size_t>(at) * in_stride];
      } else if (boundary == Boundary::symmetric) {
        x = in[static_cast<std::size_t>(reflect(at, sn)) * in_stride];
      }
      acc_lo += sym5::dec_lo[j] * x;
      acc_hi += sym5::dec_hi[j] * x;
    }
    lo[o * out_stride] = acc_lo;
    hi[o * out_stride] = acc_hi;
  }
}

// Splits a rows x cols array into its four quarter bands.
void analyze_2d(const std::vector<double>& in, std::size_t rows, std::size_t cols, Boundary boundary, WaveletBand& ll,
                WaveletBand& horizontal, WaveletBand& vertical, WaveletBand& diagonal) {
  const std::size_t orows = dwt_output_length(rows), ocols = dwt_output_length(cols);
  // Along columns (axis 1) for every row.
  std::vector<double> lo_c(rows * ocols), hi_c(rows * ocols);
  for (std::size_t r = 0; r < rows; ++r) {
    analyze_line(in.data() + r * cols, cols, 1, lo_c.data() + r * ocols, hi_c.data() + r * ocols, 1, boundary);
  }
  for (WaveletBand* b : {&ll, &horizontal, &vertical, &diagonal}) {
    b->rows = orows;
    b->cols = ocols;
    b->coef.assign(orows * ocols, 0.0);
  }
  // Along rows (axis 0) for every column.
  for (std::size_t c = 0; c < ocols; ++c) {
    analyze_line(lo_c.data() + c, rows, ocols, ll.coef.data() + c, horizontal.coef.data() + c, ocols, boundary);
    analyze_line(hi_c.data() + c, rows, ocols, vertical.coef.data() + c, diagonal.coef.data() + c, ocols, boundary);
  }
}

double band_l1(const WaveletBand& a, const WaveletBand& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.coef.size(); ++i) acc += std::abs(a.coef[i] - b.coef[i]);
  return acc;
}

}  // namespace

std::string_view boundary_name(Boundary boundary) {
  return boundary == Boundary::symmetric ? "symmetric" : "zero";
}

Boundary parse_boundary(std::string_view name) {
  if (name == "symmetric") return Boundary::symmetric;
  if (name == "zero") return Boundary::zero;
  throw Error(Errc::invalid_argument, "unknown wavelet boundary '" + std::string(name) + "' (expected zero or symmetric)");
}

int feasible_depth(std::size_t size, int requested) {
  int depth = 0;
  std::size_t n = size;
  while (depth < requested && n >= 2 && dwt_output_length(n) < n) {
    n = dwt_output_length(n);
    ++depth;
  }
  return depth;
}

double WaveletPyramid::weight(int level) const {
  if (level < 1 || level > levels()) throw Error(Errc::invalid_argument, "no level " + std::to_string(level));
  return std::ldexp(1.0, -2 * (levels() - level));
}

bool WaveletPyramid::same_shape(const WaveletPyramid& other) const {
  if (levels() != other.levels() || boundary_ != other.boundary_) return false;
  if (approx_.rows != other.approx_.rows || approx_.cols != other.approx_.cols) return false;
  for (std::size_t l = 0; l < details_.size(); ++l) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (details_[l][k].rows != other.details_[l][k].rows || details_[l][k].cols != other.details_[l][k].cols) {
        return false;
      }
    }
  }
  return true;
}

std::size_t WaveletPyramid::coefficient_count() const {
  std::size_t total = approx_.coef.size();
  for (const auto& level : details_) {
    for (const auto& band : level) total += band.coef.size();
  }
  return total;
}

std::vector<double> WaveletPyramid::weighted_coefficients() const {
  std::vector<double> out;
  out.reserve(coefficient_count());
  out.insert(out.end(), approx_.coef.begin(), approx_.coef.end());
  for (int level = levels(); level >= 1; --level) {
    const double w = weight(level);
    for (const auto& band : details_[static_cast<std::size_t>(level - 1)]) {
      for (double c : band.coef) out.push_back(w * c);
    }
  }
  return out;
}

WaveletPyramid dwt2(const Image& image, int levels, Boundary boundary) {
  if (image.empty()) throw Error(Errc::shape, "cannot transform an empty image");
  if (levels < 1) throw Error(Errc::invalid_argument, "need at least one decomposition level");
  WaveletPyramid pyr;
  pyr.requested_ = levels;
  pyr.boundary_ = boundary;
  const int depth = feasible_depth(image.size(), levels);
  if (depth < 1) throw Error(Errc::shape, "image too small for any decomposition level");

  std::vector<double> current(image.pixels().begin(), image.pixels().end());
  std::size_t rows = image.size(), cols = image.size();
  pyr.details_.resize(static_cast<std::size_t>(depth));
  for (int level = 1; level <= depth; ++level) {
    WaveletBand ll;
    auto& d = pyr.details_[static_cast<std::size_t>(level - 1)];
    analyze_2d(current, rows, cols, boundary, ll, d[0], d[1], d[2]);
    rows = ll.rows;
    cols = ll.cols;
    current = std::move(ll.coef);
  }
  pyr.approx_ = WaveletBand{rows, cols, std::move(current)};
  return pyr;
}

double approx_w1(const WaveletPyramid& a, const WaveletPyramid& b, double pixel_size) {
  if (!a.same_shape(b)) throw Error(Errc::shape, "wavelet pyramids differ in shape or depth");
  double acc = band_l1(a.approximation(), b.approximation());
  for (int level = a.levels(); level >= 1; --level) {
    double level_acc = 0.0;
    for (Detail kind : {Detail::horizontal, Detail::vertical, Detail::diagonal}) {
      level_acc += band_l1(a.detail(level, kind), b.detail(level, kind));
    }
    acc += a.weight(level) * level_acc;
  }
  return pixel_size * acc;
}

}  // namespace wkm
