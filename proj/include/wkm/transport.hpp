#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "wkm/image.hpp"

namespace wkm {

/// Largest image side the exact oracle accepts.
inline constexpr std::size_t kExactSizeCap = 32;

struct TransportPlan {
  struct Entry {
    std::array<int, 2> source{};  // (row, col)
    std::array<int, 2> target{};
    double mass = 0.0;
  };
  std::vector<Entry> pairs;
  double cost = 0.0;  // sum of mass * |u - v|^p in ground units
  int p = 1;
};

struct TransportResult {
  double distance = 0.0;  // the un-rooted optimal objective
  TransportPlan plan;
};

/// Optimal coupling between two discrete distributions with a dense cost matrix
/// (row-major, supplies.size() x demands.size()). Masses must be nonnegative with
/// equal totals to 1e-9 relative. Returns flows in the same layout.
struct FlowSolution {
  std::vector<double> flow;
  double cost = 0.0;
};
FlowSolution solve_transport(std::span<const double> supplies, std::span<const double> demands,
                             std::span<const double> cost);

/// Exact Wasserstein-p objective between two images of equal mass. Both images
/// are rescaled to unit mass; coordinates are pixel indices times pixel_size.
TransportResult exact_wp(const Image& a, const Image& b, int p, double pixel_size);

/// Minimum of exact_wp(a, rotate(b, theta), 1) over `rotation_count` equally
/// spaced angles; each rotated copy is rescaled to the mass of `a`.
double exact_w1_rotinv(const Image& a, const Image& b, int rotation_count, double pixel_size);

}  // namespace wkm
