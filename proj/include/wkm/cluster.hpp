#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wkm/image.hpp"
#include "wkm/metrics.hpp"

namespace wkm {

/// Image i is best explained by rotating centroid `cluster` by grid angle `rotation`.
struct Assignment {
  int cluster = 0;
  int rotation = 0;
  double distance = 0.0;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct ClusterParams {
  int k = 0;
  Metric metric = Metric::wemd;
  int rotations = 200;
  std::uint64_t seed = 0;
  int max_iters = 100;
  double rel_tol = 1e-4;
  WaveletConfig wavelet;
};

struct IterationTiming {
  double assign_seconds = 0.0;
  double update_seconds = 0.0;
};

struct ClusterModel {
  ClusterParams params;
  double pixel_size = 0.0;
  std::vector<Image> centroids;
  std::vector<Assignment> assignments;
  std::vector<double> loss_trace;  // loss after each accepted assignment pass
  int iterations = 0;
  std::vector<IterationTiming> timing;
  double init_seconds = 0.0;
  std::string stop_reason;  // "unchanged", "tolerance", "max_iters" or "loss_increase"
  std::optional<double> rejected_loss;
  std::vector<std::string> warnings;

  std::vector<std::size_t> cluster_sizes() const;
};

struct AssignResult {
  std::vector<Assignment> assignments;
  double loss = 0.0;  // sum of squared distances
};

/// Rotationally-invariant k-means++ seeding. Returns the chosen image indices
/// in draw order. `first` forces the initial pick instead of drawing it.
std::vector<std::size_t> kmeanspp_indices(std::span<const Image> data, int k, Metric metric, int rotations,
                                          std::uint64_t seed, double pixel_size, const WaveletConfig& wavelet = {},
                                          std::optional<std::size_t> first = std::nullopt);

std::vector<Image> kmeanspp_init(std::span<const Image> data, int k, Metric metric, int rotations,
                                 std::uint64_t seed, double pixel_size, const WaveletConfig& wavelet = {});

/// One assignment pass against fixed centroids.
AssignResult assign_only(std::span<const Image> data, std::span<const Image> centroids, Metric metric,
                         int rotations, double pixel_size, const WaveletConfig& wavelet = {});

/// Rotationally-invariant k-means from k-means++ seeds.
ClusterModel fit(std::span<const Image> data, const ClusterParams& params, double pixel_size);

/// Same, starting from the given centroids.
ClusterModel fit_from(std::span<const Image> data, const ClusterParams& params, double pixel_size,
                      std::vector<Image> centroids);

/// Mean of the members of `cluster`, each rotated back by its assigned angle,
/// summed in image order.
Image cluster_mean(std::span<const Image> data, std::span<const Assignment> assignments, int cluster,
                   const RotationGrid& grid);

/// model.json, assignments.csv and centroids.f32. `extra` is merged into model.json.
void save_run(const ClusterModel& model, const std::filesystem::path& dir,
              const nlohmann::json& extra = nlohmann::json::object());

/// Reads a run directory back (centroids included).
ClusterModel load_run(const std::filesystem::path& dir);

nlohmann::json model_summary(const ClusterModel& model);

}  // namespace wkm
