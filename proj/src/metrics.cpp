#include "wkm/metrics.hpp"

#include "wkm/error.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <limits>
#include <cmath>
#include <numbers>
#include <string>

namespace wkm {

Metric parse_metric(std::string_view name) {
  if (name == "l2") return Metric::l2;
  if (name == "wemd") return Metric::wemd;
  throw Error(Errc::invalid_argument, "unknown metric '" + std::string(name) + "' (expected l2 or wemd)");
}

std::string_view metric_name(Metric metric) { return metric == Metric::l2 ? "l2" : "wemd"; }

RotationGrid::RotationGrid(int count) {
  if (count < 1) throw Error(Errc::invalid_argument, "rotation count must be at least 1");
  angles_.resize(static_cast<std::size_t>(count));
  // r / m is formed first so that nested grids (m | m') share bit-identical angles.
  for (int r = 0; r < count; ++r) {
    angles_[static_cast<std::size_t>(r)] = 2.0 * std::numbers::pi * (static_cast<double>(r) / static_cast<double>(count));
  }
}

Image rotate_image(const Image& image, double theta) {
  if (theta == 0.0) return image;
  const std::size_t n = image.size();
  const auto sn = static_cast<std::ptrdiff_t>(n);
  const double center = (static_cast<double>(n) - 1.0) / 2.0;
  const double c = std::cos(theta), s = std::sin(theta);
  Image out(n);
  for (std::size_t row = 0; row < n; ++row) {
    const double y = static_cast<double>(row) - center;
    for (std::size_t col = 0; col < n; ++col) {
      const double x = static_cast<double>(col) - center;
      // Source position: R(-theta) applied to (x, y).
      const double sx = c * x + s * y + center;
      const double sy = -s * x + c * y + center;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const auto x0 = static_cast<std::ptrdiff_t>(fx), y0 = static_cast<std::ptrdiff_t>(fy);
      if (x0 < -1 || y0 < -1 || x0 >= sn || y0 >= sn) continue;
      const double tx = sx - fx, ty = sy - fy;
      double acc = 0.0;
      for (int dy = 0; dy < 2; ++dy) {
        const std::ptrdiff_t yy = y0 + dy;
        if (yy < 0 || yy >= sn) continue;
        const double wy = dy ? ty : 1.0 - ty;
        for (int dx = 0; dx < 2; ++dx) {
          const std::ptrdiff_t xx = x0 + dx;
          if (xx < 0 || xx >= sn) continue;
          const double wx = dx ? tx : 1.0 - tx;
          if (wx * wy == 0.0) continue;
          acc += wy * wx * image(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
        }
      }
      out(row, col) = acc;
    }
  }
  return out;
}

double base_distance(Metric metric, const Image& a, const Image& b, double pixel_size, const WaveletConfig& wavelet) {
  if (a.size() != b.size()) throw Error(Errc::shape, "images differ in size");
  if (metric == Metric::wemd) return approx_w1(dwt2(a, wavelet), dwt2(b, wavelet), pixel_size);
  double acc = 0.0;
  const auto pa = a.pixels(), pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = pa[i] - pb[i];
    acc += d * d;
  }
  return pixel_size * std::sqrt(acc);
}

RotatedStack::RotatedStack(const Image& source, const RotationGrid& grid, Metric metric, double pixel_size,
                           long source_id, const WaveletConfig& wavelet)
    : metric_(metric), pixel_size_(pixel_size), source_id_(source_id), wavelet_(wavelet) {
  if (source.empty()) throw Error(Errc::shape, "cannot rotate an empty image");
  copies_.reserve(static_cast<std::size_t>(grid.count()));
  for (double theta : grid.angles()) copies_.push_back(rotate_image(source, theta));
  if (metric == Metric::wemd) {
    pyramids_.reserve(copies_.size());
    for (const auto& copy : copies_) pyramids_.push_back(dwt2(copy, wavelet));
  }
}

RotinvResult rotinv_distance(Metric metric, const RotatedStack& rotated, const Image& fixed) {
  if (metric != rotated.metric()) throw Error(Errc::invalid_argument, "stack was built for a different metric");
  if (fixed.size() != rotated.image_size()) throw Error(Errc::shape, "image and rotated stack differ in size");
  RotinvResult best{std::numeric_limits<double>::infinity(), 0};
  if (metric == Metric::wemd) {
    const WaveletPyramid fixed_pyr = dwt2(fixed, rotated.wavelet());
    for (int r = 0; r < static_cast<int>(rotated.count()); ++r) {
      const double d = approx_w1(fixed_pyr, rotated.pyramid(r), rotated.pixel_size());
      if (d < best.distance) best = {d, r};
    }
  } else {
    for (int r = 0; r < static_cast<int>(rotated.count()); ++r) {
      const double d = base_distance(Metric::l2, fixed, rotated.copy(r), rotated.pixel_size());
      if (d < best.distance) best = {d, r};
    }
  }
  return best;
}

double rotinv_l2(const Image& a, const Image& b, int rotations, double pixel_size) {
  const RotatedStack stack(b, RotationGrid(rotations), Metric::l2, pixel_size);
  return rotinv_distance(Metric::l2, stack, a).distance;
}

double rotinv_w1(const Image& a, const Image& b, int rotations, double pixel_size, const WaveletConfig& wavelet) {
  const RotatedStack stack(b, RotationGrid(rotations), Metric::wemd, pixel_size, -1, wavelet);
  return rotinv_distance(Metric::wemd, stack, a).distance;
}

std::vector<float> embed(Metric metric, const Image& image, const WaveletConfig& wavelet) {
  if (metric == Metric::l2) return std::vector<float>(image.pixels().begin(), image.pixels().end());
  const auto coefs = dwt2(image, wavelet).weighted_coefficients();
  return std::vector<float>(coefs.begin(), coefs.end());
}

namespace {

constexpr std::size_t kLanes = 16;
constexpr std::size_t kFlush = 512;
constexpr std::size_t kBatch = 4;

typedef float Lanes __attribute__((vector_size(kLanes * sizeof(float))));
typedef std::uint32_t LaneBits __attribute__((vector_size(kLanes * sizeof(float))));

inline Lanes load(const float* p) {
  Lanes v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

struct AbsOp {
  static Lanes apply(Lanes d) { return reinterpret_cast<Lanes>(reinterpret_cast<LaneBits>(d) & 0x7fffffffu); }
  static float apply(float d) { return std::fabs(d); }
};

struct SquareOp {
  static Lanes apply(Lanes d) { return d * d; }
  static float apply(float d) { return d * d; }
};

// Every row is summed with the same lane layout as a single call, so results
// do not depend on how rows are grouped.
template <class Op, std::size_t R>
void lane_sums(const float* const* a, const float* b, std::size_t n, double* out) {
  double total[R] = {};
  std::size_t i = 0;
  while (i < n) {
    const std::size_t stop = std::min(n, i + kFlush);
    Lanes lanes[R] = {};
    for (; i + kLanes <= stop; i += kLanes) {
      const Lanes bv = load(b + i);
      for (std::size_t r = 0; r < R; ++r) lanes[r] += Op::apply(load(a[r] + i) - bv);
    }
    float tail[R] = {};
    for (; i < stop; ++i) {
      for (std::size_t r = 0; r < R; ++r) tail[r] += Op::apply(a[r][i] - b[i]);
    }
    for (std::size_t r = 0; r < R; ++r) {
      lanes[r][0] += tail[r];
      for (std::size_t l = 0; l < kLanes; ++l) total[r] += static_cast<double>(lanes[r][l]);
    }
  }
  for (std::size_t r = 0; r < R; ++r) out[r] = total[r];
}

template <class Op>
void batch(const float* const* rows, std::size_t count, const float* b, std::size_t n, double* out) {
  std::size_t r = 0;
  for (; r + kBatch <= count; r += kBatch) lane_sums<Op, kBatch>(rows + r, b, n, out + r);
  for (; r < count; ++r) lane_sums<Op, 1>(rows + r, b, n, out + r);
}

}  // namespace

double embedded_raw(Metric metric, const float* a, const float* b, std::size_t n) {
  double out = 0.0;
  embedded_raw_batch(metric, &a, 1, b, n, &out);
  return out;
}

void embedded_raw_batch(Metric metric, const float* const* rows, std::size_t count, const float* b, std::size_t n,
                        double* out) {
  if (metric == Metric::wemd) {
    batch<AbsOp>(rows, count, b, n, out);
  } else {
    batch<SquareOp>(rows, count, b, n, out);
  }
}

}  // namespace wkm
