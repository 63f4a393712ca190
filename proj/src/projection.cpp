#include "wkm/projection.hpp"

#include "wkm/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace wkm {

namespace {

// Trilinear sample at continuous voxel index (u, v, w); voxels outside the grid read as 0.
double trilinear(const Volume& vol, double u, double v, double w) {
  const auto side = static_cast<std::ptrdiff_t>(vol.side());
  const double fu = std::floor(u), fv = std::floor(v), fw = std::floor(w);
  const auto i0 = static_cast<std::ptrdiff_t>(fu), j0 = static_cast<std::ptrdiff_t>(fv),
             k0 = static_cast<std::ptrdiff_t>(fw);
  if (i0 < -1 || j0 < -1 || k0 < -1 || i0 >= side || j0 >= side || k0 >= side) return 0.0;
  const double tu = u - fu, tv = v - fv, tw = w - fw;
  double acc = 0.0;
  for (int dk = 0; dk < 2; ++dk) {
    const std::ptrdiff_t k = k0 + dk;
    if (k < 0 || k >= side) continue;
    const double wk = dk ? tw : 1.0 - tw;
    for (int dj = 0; dj < 2; ++dj) {
      const std::ptrdiff_t j = j0 + dj;
      if (j < 0 || j >= side) continue;
      const double wj = dj ? tv : 1.0 - tv;
      for (int di = 0; di < 2; ++di) {
        const std::ptrdiff_t i = i0 + di;
        if (i < 0 || i >= side) continue;
        const double wi = di ? tu : 1.0 - tu;
        acc += wk * wj * wi * vol(static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<std::size_t>(k));
      }
    }
  }
  return acc;
}

// Row p of the 1D box-filter matrix: overlap of output cell p with each input cell,
// divided by the output cell width (both in input-cell units).
std::vector<std::vector<std::pair<std::size_t, double>>> box_weights(std::size_t in, std::size_t out) {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t p = 0; p < out; ++p) {
    const double lo = static_cast<double>(p) * scale, hi = static_cast<double>(p + 1) * scale;
    const auto first = static_cast<std::size_t>(std::floor(lo));
    const auto last = std::min(in, static_cast<std::size_t>(std::ceil(hi)));
    for (std::size_t q = first; q < last; ++q) {
      const double overlap = std::min(hi, static_cast<double>(q + 1)) - std::max(lo, static_cast<double>(q));
      if (overlap > 0.0) rows[p].emplace_back(q, overlap / scale);
    }
  }
  return rows;
}

}  // namespace

Image resample_area(const Image& image, std::size_t out_size) {
  const std::size_t in = image.size();
  if (in == out_size) return image;
  if (out_size == 0) throw Error(Errc::shape, "resample target must be nonempty");
  const auto w = box_weights(in, out_size);
  // Columns first, then rows.
  std::vector<double> tmp(in * out_size, 0.0);
  for (std::size_t r = 0; r < in; ++r) {
    for (std::size_t c = 0; c < out_size; ++c) {
      double acc = 0.0;
      for (const auto& [q, wt] : w[c]) acc += wt * image(r, q);
      tmp[r * out_size + c] = acc;
    }
  }
  Image out(out_size);
  for (std::size_t r = 0; r < out_size; ++r) {
    for (std::size_t c = 0; c < out_size; ++c) {
      double acc = 0.0;
      for (const auto& [q, wt] : w[r]) acc += wt * tmp[q * out_size + c];
      out(r, c) = acc;
    }
  }
  return out;
}

Image project(const Volume& volume, const Orientation& orientation, std::size_t out_size) {
  if (out_size < 8) throw Error(Errc::invalid_argument, "projection size must be at least 8");
  const std::size_t side = volume.side();
  const double h = volume.voxel_size();
  // Ground point p maps to continuous voxel index p / h + (side - 1) / 2.
  const double half = (static_cast<double>(side) - 1.0) / 2.0;
  const Vec3 dir = orientation.apply_inverse({0.0, 0.0, 1.0});

  Image native(side);
  for (std::size_t row = 0; row < side; ++row) {
    const double y = volume.coordinate(row);
    for (std::size_t col = 0; col < side; ++col) {
      const double x = volume.coordinate(col);
      const Vec3 base = orientation.apply_inverse({x, y, 0.0});
      double acc = 0.0;
      for (std::size_t k = 0; k < side; ++k) {
        const double z = volume.coordinate(k);
        acc += trilinear(volume, (base[0] + z * dir[0]) / h + half, (base[1] + z * dir[1]) / h + half,
                         (base[2] + z * dir[2]) / h + half);
      }
      native(row, col) = acc * h;
    }
  }
  return resample_area(native, out_size);
}

double compute_sigma(std::span<const Image> clean_stack, double target_snr) {
  if (!(target_snr > 0.0)) throw Error(Errc::invalid_argument, "target SNR must be positive");
  if (clean_stack.empty()) throw Error(Errc::invalid_argument, "clean stack is empty");
  double energy = 0.0;
  std::size_t pixels = 0;
  for (const auto& img : clean_stack) {
    energy += img.squared_norm();
    pixels += img.pixel_count();
  }
  if (!(energy > 0.0)) throw Error(Errc::degenerate_signal, "clean stack has zero energy");
  return std::sqrt(energy / (static_cast<double>(pixels) * target_snr));
}

}  // namespace wkm
