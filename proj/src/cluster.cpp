#include "wkm/cluster.hpp"

#include "wkm/dataset.hpp"
#include "wkm/error.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace wkm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr std::size_t kImageBlock = 16;

// Holds float embeddings of the dataset and of every rotated centroid, and runs
// the (image x centroid x rotation) search.
class DistanceEngine {
 public:
  DistanceEngine(std::span<const Image> data, Metric metric, int rotations, double pixel_size,
                 const WaveletConfig& wavelet)
      : metric_(metric), grid_(rotations), pixel_size_(pixel_size), wavelet_(wavelet), n_(data.size()) {
    if (data.empty()) throw Error(Errc::invalid_argument, "dataset is empty");
    size_ = data.front().size();
    for (const auto& img : data) {
      if (img.size() != size_) throw Error(Errc::shape, "dataset images differ in size");
    }
    dim_ = embed(metric_, data.front(), wavelet_).size();
    images_.resize(n_ * dim_);
    const auto count = static_cast<std::ptrdiff_t>(n_);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const auto e = embed(metric_, data[static_cast<std::size_t>(i)], wavelet_);
      std::copy(e.begin(), e.end(), images_.begin() + i * static_cast<std::ptrdiff_t>(dim_));
    }
  }

  const RotationGrid& grid() const { return grid_; }
  int rotations() const { return grid_.count(); }

  void load_centroids(std::span<const Image> centroids) {
    for (const auto& c : centroids) {
      if (c.size() != size_) throw Error(Errc::shape, "centroid size does not match the dataset");
    }
    centroids_ = centroids.size();
    const auto m = static_cast<std::size_t>(rotations());
    bank_.resize(centroids_ * m * dim_);
    const auto slots = static_cast<std::ptrdiff_t>(centroids_ * m);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t s = 0; s < slots; ++s) {
      const auto j = static_cast<std::size_t>(s) / m;
      const auto r = static_cast<int>(static_cast<std::size_t>(s) % m);
      const auto e = embed(metric_, rotate_image(centroids[j], grid_.angle(r)), wavelet_);
      std::copy(e.begin(), e.end(), bank_.begin() + s * static_cast<std::ptrdiff_t>(dim_));
    }
  }

  // Best (centroid, rotation) per image over the loaded bank; lexicographic ties.
  std::vector<Assignment> assign() const {
    std::vector<Assignment> out(n_);
    const auto m = static_cast<std::size_t>(rotations());
    const std::size_t slots = centroids_ * m;
    const auto blocks = static_cast<std::ptrdiff_t>((n_ + kImageBlock - 1) / kImageBlock);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < blocks; ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * kImageBlock;
      const std::size_t hi = std::min(n_, lo + kImageBlock);
      double best[kImageBlock];
      std::size_t arg[kImageBlock];
      std::fill(best, best + kImageBlock, std::numeric_limits<double>::infinity());
      std::fill(arg, arg + kImageBlock, 0);
      const float* rows[kImageBlock];
      for (std::size_t i = lo; i < hi; ++i) rows[i - lo] = images_.data() + i * dim_;
      double raw[kImageBlock];
      for (std::size_t s = 0; s < slots; ++s) {
        embedded_raw_batch(metric_, rows, hi - lo, bank_.data() + s * dim_, dim_, raw);
        for (std::size_t i = 0; i < hi - lo; ++i) {
          if (raw[i] < best[i]) {
            best[i] = raw[i];
            arg[i] = s;
          }
        }
      }
      for (std::size_t i = lo; i < hi; ++i) {
        out[i] = {static_cast<int>(arg[i - lo] / m), static_cast<int>(arg[i - lo] % m),
                  embedded_finish(metric_, best[i - lo], pixel_size_)};
      }
    }
    return out;
  }

  // Rotationally-invariant distance from every image to the single loaded centroid.
  std::vector<double> distances_to_single() const {
    std::vector<Assignment> a = assign();
    std::vector<double> out(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = a[i].distance;
    return out;
  }

 private:
  Metric metric_;
  RotationGrid grid_;
  double pixel_size_;
  WaveletConfig wavelet_;
  std::size_t n_;
  std::size_t size_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> images_;
  std::size_t centroids_ = 0;
  std::vector<float> bank_;
};

double total_loss(std::span<const Assignment> assignments) {
  double loss = 0.0;
  for (const auto& a : assignments) loss += a.distance * a.distance;
  return loss;
}

void check_k(std::size_t n, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw Error(Errc::invalid_k, "k = " + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  }
}

std::vector<std::size_t> kmeanspp_with_engine(DistanceEngine& engine, std::span<const Image> data, int k,
                                              std::uint64_t seed, std::optional<std::size_t> first) {
  const std::size_t n = data.size();
  check_k(n, k);
  auto rng = derived_rng(seed, 0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::size_t> chosen;
  std::vector<char> taken(n, 0);
  std::size_t pick = 0;
  if (first) {
    if (*first >= n) throw Error(Errc::invalid_argument, "first index out of range");
    pick = *first;
  } else {
    pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  }
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (;;) {
    chosen.push_back(pick);
    taken[pick] = 1;
    if (chosen.size() == static_cast<std::size_t>(k)) break;

    const Image& center = data[pick];
    engine.load_centroids(std::span<const Image>(&center, 1));
    const auto d = engine.distances_to_single();
    double total = 0.0;
    std::vector<double> weight(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], d[i]);
      if (!taken[i]) weight[i] = nearest[i] * nearest[i];
      total += weight[i];
    }

    if (total > 0.0) {
      const double u = unit(rng) * total;
      double cum = 0.0;
      std::size_t last_positive = n;
      pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (weight[i] <= 0.0) continue;
        last_positive = i;
        cum += weight[i];
        if (cum > u) {
          pick = i;
          break;
        }
      }
      if (pick == n) pick = last_positive;
    } else {
      // Only duplicates of chosen centers remain: draw uniformly among the unchosen.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i) if (!taken[i]) rest.push_back(i);
      pick = rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)];
    }
  }
  return chosen;
}

// Moves the worst-fit image of a multi-member cluster into each empty cluster.
int reseed_empty(std::span<const Image> data, std::vector<Assignment>& assignments, int k,
                 std::vector<Image>& centroids) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (const auto& a : assignments) ++sizes[static_cast<std::size_t>(a.cluster)];
  int moved = 0;
  for (int j = 0; j < k; ++j) {
    if (sizes[static_cast<std::size_t>(j)] != 0) continue;
    std::size_t worst = assignments.size();
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (sizes[static_cast<std::size_t>(assignments[i].cluster)] < 2) continue;
      if (worst == assignments.size() || assignments[i].distance > assignments[worst].distance) worst = i;
    }
    if (worst == assignments.size()) break;
    --sizes[static_cast<std::size_t>(assignments[worst].cluster)];
    assignments[worst] = {j, 0, 0.0};
    sizes[static_cast<std::size_t>(j)] = 1;
    centroids[static_cast<std::size_t>(j)] = data[worst];
    ++moved;
  }
  return moved;
}

}  // namespace

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
  std::vector<std::size_t> sizes(centroids.size(), 0);
  for (const auto& a : assignments) ++sizes.at(static_cast<std::size_t>(a.cluster));
  return sizes;
}

std::vector<std::size_t> kmeanspp_indices(std::span<const Image> data, int k, Metric metric, int rotations,
                                          std::uint64_t seed, double pixel_size, const WaveletConfig& wavelet,
                                          std::optional<std::size_t> first) {
  check_k(data.size(), k);
  DistanceEngine engine(data, metric, rotations, pixel_size, wavelet);
  return kmeanspp_with_engine(engine, data, k, seed, first);
}

std::vector<Image> kmeanspp_init(std::span<const Image> data, int k, Metric metric, int rotations,
                                 std::uint64_t seed, double pixel_size, const WaveletConfig& wavelet) {
  std::vector<Image> out;
  for (std::size_t i : kmeanspp_indices(data, k, metric, rotations, seed, pixel_size, wavelet)) out.push_back(data[i]);
  return out;
}

AssignResult assign_only(std::span<const Image> data, std::span<const Image> centroids, Metric metric,
                         int rotations, double pixel_size, const WaveletConfig& wavelet) {
  if (centroids.empty()) throw Error(Errc::invalid_k, "no centroids");
  DistanceEngine engine(data, metric, rotations, pixel_size, wavelet);
  engine.load_centroids(centroids);
  AssignResult out;
  out.assignments = engine.assign();
  out.loss = total_loss(out.assignments);
  return out;
}

Image cluster_mean(std::span<const Image> data, std::span<const Assignment> assignments, int cluster,
                   const RotationGrid& grid) {
  Image sum(data.front().size());
  std::size_t members = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (assignments[i].cluster != cluster) continue;
    const Image back = rotate_image(data[i], -grid.angle(assignments[i].rotation));
    auto dst = sum.pixels();
    const auto src = back.pixels();
    for (std::size_t p = 0; p < dst.size(); ++p) dst[p] += src[p];
    ++members;
  }
  if (members == 0) throw Error(Errc::invalid_argument, "cluster " + std::to_string(cluster) + " is empty");
  for (double& v : sum.pixels()) v /= static_cast<double>(members);
  return sum;
}

ClusterModel fit(std::span<const Image> data, const ClusterParams& params, double pixel_size) {
  check_k(data.size(), params.k);
  const auto start = Clock::now();
  DistanceEngine engine(data, params.metric, params.rotations, pixel_size, params.wavelet);
  std::vector<Image> seeds;
  for (std::size_t i : kmeanspp_with_engine(engine, data, params.k, params.seed, std::nullopt)) seeds.push_back(data[i]);
  const double init_seconds = seconds_since(start);
  ClusterModel model = fit_from(data, params, pixel_size, std::move(seeds));
  model.init_seconds = init_seconds;
  return model;
}

ClusterModel fit_from(std::span<const Image> data, const ClusterParams& params, double pixel_size,
                      std::vector<Image> centroids) {
  check_k(data.size(), params.k);
  if (centroids.size() != static_cast<std::size_t>(params.k)) {
    throw Error(Errc::invalid_k, "expected " + std::to_string(params.k) + " initial centroids");
  }
  if (params.max_iters < 1) throw Error(Errc::invalid_argument, "max_iters must be at least 1");
  if (!(params.rel_tol >= 0.0)) throw Error(Errc::invalid_argument, "rel_tol must be nonnegative");

  ClusterModel model;
  model.params = params;
  model.pixel_size = pixel_size;
  model.centroids = std::move(centroids);

  DistanceEngine engine(data, params.metric, params.rotations, pixel_size, params.wavelet);
  const auto k = static_cast<std::ptrdiff_t>(params.k);

  for (int it = 1; it <= params.max_iters; ++it) {
    auto t0 = Clock::now();
    engine.load_centroids(model.centroids);
    std::vector<Assignment> assignments = engine.assign();
    const double loss = total_loss(assignments);
    const double assign_seconds = seconds_since(t0);

    if (!model.loss_trace.empty() && loss > model.loss_trace.back()) {
      model.rejected_loss = loss;
      model.warnings.push_back("iteration " + std::to_string(it) + " raised the loss from " +
                               std::to_string(model.loss_trace.back()) + " to " + std::to_string(loss) +
                               "; keeping the previous model");
      model.stop_reason = "loss_increase";
      break;
    }

    t0 = Clock::now();
    std::vector<Image> next = model.centroids;
    const int moved = reseed_empty(data, assignments, params.k, next);
    if (moved > 0) model.warnings.push_back("iteration " + std::to_string(it) + " reseeded " + std::to_string(moved) + " empty cluster(s)");
    std::vector<char> occupied(static_cast<std::size_t>(params.k), 0);
    for (const auto& a : assignments) occupied[static_cast<std::size_t>(a.cluster)] = 1;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < k; ++j) {
      if (occupied[static_cast<std::size_t>(j)]) {
        next[static_cast<std::size_t>(j)] = cluster_mean(data, assignments, static_cast<int>(j), engine.grid());
      }
    }
    const double update_seconds = seconds_since(t0);

    const bool unchanged = !model.assignments.empty() && std::equal(
        assignments.begin(), assignments.end(), model.assignments.begin(),
        [](const Assignment& a, const Assignment& b) { return a.cluster == b.cluster && a.rotation == b.rotation; });
    const double previous = model.loss_trace.empty() ? 0.0 : model.loss_trace.back();

    model.loss_trace.push_back(loss);
    model.timing.push_back({assign_seconds, update_seconds});
    model.iterations = it;
    model.assignments = std::move(assignments);
    model.centroids = std::move(next);

    if (unchanged) {
      model.stop_reason = "unchanged";
      break;
    }
    if (model.loss_trace.size() > 1 && previous > 0.0 && (previous - loss) / previous < params.rel_tol) {
      model.stop_reason = "tolerance";
      break;
    }
    if (loss == 0.0) {
      model.stop_reason = "tolerance";
      break;
    }
  }
  if (model.stop_reason.empty()) model.stop_reason = "max_iters";
  return model;
}

nlohmann::json model_summary(const ClusterModel& model) {
  nlohmann::json j;
  j["k"] = model.params.k;
  j["metric"] = metric_name(model.params.metric);
  j["rotations"] = model.params.rotations;
  j["seed"] = model.params.seed;
  j["max_iters"] = model.params.max_iters;
  j["rel_tol"] = model.params.rel_tol;
  j["levels"] = model.params.wavelet.levels;
  j["wavelet_boundary"] = boundary_name(model.params.wavelet.boundary);
  j["pixel_size"] = model.pixel_size;
  j["n"] = model.assignments.size();
  j["size"] = model.centroids.empty() ? 0 : model.centroids.front().size();
  j["iterations"] = model.iterations;
  j["loss_trace"] = model.loss_trace;
  j["stop_reason"] = model.stop_reason;
  j["rejected_loss"] = model.rejected_loss ? nlohmann::json(*model.rejected_loss) : nlohmann::json(nullptr);
  j["warnings"] = model.warnings;
  auto& timing = j["timing"];
  timing["init_seconds"] = model.init_seconds;
  timing["assign_seconds"] = nlohmann::json::array();
  timing["update_seconds"] = nlohmann::json::array();
  for (const auto& t : model.timing) {
    timing["assign_seconds"].push_back(t.assign_seconds);
    timing["update_seconds"].push_back(t.update_seconds);
  }
  return j;
}

void save_run(const ClusterModel& model, const std::filesystem::path& dir, const nlohmann::json& extra) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json j = model_summary(model);
  for (const auto& [key, value] : extra.items()) j[key] = value;
  {
    std::ofstream out(dir / "model.json");
    if (!out) throw Error(Errc::io, "cannot create " + (dir / "model.json").string());
    out << j.dump(1) << '\n';
  }
  {
    std::ofstream out(dir / "assignments.csv");
    if (!out) throw Error(Errc::io, "cannot create " + (dir / "assignments.csv").string());
    out << "image_id,cluster_id,rotation_index,distance\n";
    char buf[64];
    for (std::size_t i = 0; i < model.assignments.size(); ++i) {
      const auto& a = model.assignments[i];
      std::snprintf(buf, sizeof buf, "%.17g", a.distance);
      out << i << ',' << a.cluster << ',' << a.rotation << ',' << buf << '\n';
    }
    if (!out) throw Error(Errc::io, "failed writing assignments.csv");
  }
  write_f32_stack(dir / "centroids.f32", model.centroids);
}

ClusterModel load_run(const std::filesystem::path& dir) {
  const auto model_path = dir / "model.json";
  std::ifstream in(model_path);
  if (!in) throw Error(Errc::io, "cannot open " + model_path.string());
  ClusterModel model;
  std::size_t n = 0, size = 0;
  try {
    nlohmann::json j;
    in >> j;
    model.params.k = j.at("k").get<int>();
    model.params.metric = parse_metric(j.at("metric").get<std::string>());
    model.params.rotations = j.at("rotations").get<int>();
    model.params.seed = j.at("seed").get<std::uint64_t>();
    model.params.max_iters = j.at("max_iters").get<int>();
    model.params.rel_tol = j.at("rel_tol").get<double>();
    model.params.wavelet.levels = j.at("levels").get<int>();
    model.params.wavelet.boundary = parse_boundary(j.value("wavelet_boundary", "zero"));
    model.pixel_size = j.at("pixel_size").get<double>();
    model.iterations = j.at("iterations").get<int>();
    model.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    model.stop_reason = j.at("stop_reason").get<std::string>();
    n = j.at("n").get<std::size_t>();
    size = j.at("size").get<std::size_t>();
    const auto& timing = j.at("timing");
    model.init_seconds = timing.at("init_seconds").get<double>();
    const auto assign = timing.at("assign_seconds").get<std::vector<double>>();
    const auto update = timing.at("update_seconds").get<std::vector<double>>();
    for (std::size_t t = 0; t < assign.size() && t < update.size(); ++t) model.timing.push_back({assign[t], update[t]});
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::data, model_path.string() + ": " + e.what());
  }

  const auto csv_path = dir / "assignments.csv";
  std::ifstream csv(csv_path);
  if (!csv) throw Error(Errc::io, "cannot open " + csv_path.string());
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field[4];
    for (auto& f : field) std::getline(row, f, ',');
    try {
      model.assignments.push_back({std::stoi(field[1]), std::stoi(field[2]), std::stod(field[3])});
    } catch (const std::exception&) {
      throw Error(Errc::data, csv_path.string() + ": malformed row '" + line + "'");
    }
  }
  if (model.assignments.size() != n) throw Error(Errc::data, csv_path.string() + ": row count does not match model.json");
  model.centroids = read_f32_stack(dir / "centroids.f32", static_cast<std::size_t>(model.params.k), size);
  return model;
}

}  // namespace wkm
