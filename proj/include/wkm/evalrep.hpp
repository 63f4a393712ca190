#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wkm/cluster.hpp"
#include "wkm/dataset.hpp"
#include "wkm/image.hpp"
#include "wkm/orientation.hpp"

namespace wkm {

inline constexpr int kAngularBins = 36;
inline constexpr double kAngularBinWidthDeg = 5.0;

struct AngularHistogram {
  std::vector<std::uint64_t> counts = std::vector<std::uint64_t>(kAngularBins, 0);
  std::uint64_t pairs = 0;
  std::optional<double> median_deg;  // empty when no cluster has two members
  double max_deg = 0.0;
  double bin_start(int b) const noexcept { return kAngularBinWidthDeg * b; }
  double bin_end(int b) const noexcept { return kAngularBinWidthDeg * (b + 1); }
};

/// Within-cluster pairwise differences of ground-truth viewing directions.
AngularHistogram angular_coherence(std::span<const Assignment> assignments, int k,
                                   std::span<const Orientation> truth);

struct Occupancy {
  std::vector<std::size_t> sizes;  // descending
  double cv = 0.0;                 // population std / mean
};

Occupancy occupancy_curve(std::span<const Assignment> assignments, int k);
Occupancy occupancy_from_sizes(std::vector<std::size_t> sizes);

/// Cluster indices ordered by decreasing size, ties by index; at most `top`.
std::vector<int> largest_clusters(std::span<const Assignment> assignments, int k, std::size_t top);

struct Pgm {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint32_t maxval = 65535;
  std::vector<std::uint16_t> pixels;  // row-major
};

/// Min-max scaling to [0, 65535]; a constant image maps to 32768.
Pgm to_gray16(const Image& image);
void write_pgm(const std::filesystem::path& path, const Pgm& pgm);
Pgm read_pgm(const std::filesystem::path& path);

/// Writes centroid_###.pgm for the `top` largest clusters (### is the size rank).
std::vector<std::filesystem::path> centroid_panel(const ClusterModel& model, std::size_t top,
                                                  const std::filesystem::path& dir);

struct ScatterRow {
  std::size_t image = 0;
  double angle_deg = 0.0;
  double d_l2 = 0.0;
  double d_w1 = 0.0;
};

/// Clean reference image against every noisy image, both metrics.
std::vector<ScatterRow> noise_scatter(const ProjectionSet& set, std::size_t reference, int rotations,
                                      const WaveletConfig& wavelet = {});
void write_scatter_csv(const std::filesystem::path& path, std::span<const ScatterRow> rows);

struct RunTiming {
  std::string label;
  std::string metric;
  int iterations = 0;
  double assign_seconds = 0.0;  // mean per pass
  double update_seconds = 0.0;  // mean per pass
  double per_iteration() const noexcept { return assign_seconds + update_seconds; }
};

struct TimingReport {
  std::vector<RunTiming> runs;
  std::optional<double> mean_l2;
  std::optional<double> mean_wemd;
  std::optional<double> wemd_over_l2;
};

RunTiming run_timing(const ClusterModel& model, std::string label = {});
TimingReport timing_report(std::span<const RunTiming> runs);
void write_timing_csv(const std::filesystem::path& path, const TimingReport& report);
nlohmann::json to_json(const TimingReport& report);

/// Average ranks for ties. NaN when either side is constant or fewer than two points.
double spearman(std::span<const double> x, std::span<const double> y);
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

struct EvalReport {
  AngularHistogram histogram;
  Occupancy occupancy;
  TimingReport timing;
  std::string metric;
  std::size_t n = 0;
  int k = 0;
};

EvalReport evaluate(const ProjectionSet& set, const ClusterModel& model);

/// report.json, angular_histogram.csv, occupancy.csv, timing.csv and the centroid panel.
void write_report(const EvalReport& report, const ClusterModel& model, std::size_t top,
                  const std::filesystem::path& dir);

struct ReparsedSummary {
  std::vector<std::uint64_t> counts;
  std::vector<std::size_t> sizes;
  double cv = 0.0;
  std::optional<double> median_deg;
};

struct OraclePair {
  std::size_t pair = 0;
  double exact_w1 = 0.0;
  double approx_w1 = 0.0;
  std::optional<double> ratio;  // exact / approx; empty for a 0/0 pair
};

struct OracleReport {
  std::size_t size = 0;
  std::uint64_t seed = 0;
  std::vector<OraclePair> rows;
  std::vector<std::size_t> skipped;
  double c = 0.0;  // smallest ratio
  double C = 0.0;  // largest ratio
};

/// Random nonnegative unit-mass image: a few Gaussian bumps over a weak
/// uniform background. The same (seed, index) always yields the same image.
Image random_density(std::size_t size, std::uint64_t seed, std::uint64_t index);

/// Compares exact W1 against its wavelet approximation on `pairs` random pairs.
/// With `inject_identical`, pair 0 compares an image with itself.
OracleReport oracle_envelope(std::size_t size, std::size_t pairs, std::uint64_t seed, bool inject_identical = false,
                             const WaveletConfig& wavelet = {});
nlohmann::json to_json(const OracleReport& report);

/// Reads the CSV and JSON artifacts back and recomputes the summary statistics.
ReparsedSummary reparse_report(const std::filesystem::path& dir);

}  // namespace wkm
