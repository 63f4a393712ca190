#include "wkm/evalrep.hpp"

#include "wkm/error.hpp"
#include "wkm/metrics.hpp"
#include "wkm/transport.hpp"
#include "wkm/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace wkm {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot create " + path.string());
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<double> median_of(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

int bin_of(double deg) {
  const int b = static_cast<int>(std::floor(deg / kAngularBinWidthDeg));
  return std::clamp(b, 0, kAngularBins - 1);
}

std::vector<std::size_t> sizes_of(std::span<const Assignment> assignments, int k) {
  if (k < 1) throw Error(Errc::invalid_k, "k must be positive");
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (const auto& a : assignments) {
    if (a.cluster < 0 || a.cluster >= k) throw Error(Errc::data, "assignment cluster out of range");
    ++sizes[static_cast<std::size_t>(a.cluster)];
  }
  return sizes;
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double choose2(double v) { return 0.5 * v * (v - 1.0); }

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream s(line);
    std::string f;
    while (std::getline(s, f, ',')) fields.push_back(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

AngularHistogram angular_coherence(std::span<const Assignment> assignments, int k,
                                   std::span<const Orientation> truth) {
  if (truth.size() < assignments.size()) {
    throw Error(Errc::data, "ground-truth orientations cover " + std::to_string(truth.size()) + " of " +
                                std::to_string(assignments.size()) + " images");
  }
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
  const auto sizes = sizes_of(assignments, k);
  for (std::size_t i = 0; i < assignments.size(); ++i) members[static_cast<std::size_t>(assignments[i].cluster)].push_back(i);

  std::vector<std::vector<double>> per_cluster(members.size());
  const auto count = static_cast<std::ptrdiff_t>(members.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    const auto& m = members[static_cast<std::size_t>(j)];
    auto& out = per_cluster[static_cast<std::size_t>(j)];
    out.reserve(m.size() * (m.size() > 0 ? m.size() - 1 : 0) / 2);
    for (std::size_t a = 0; a < m.size(); ++a) {
      for (std::size_t b = a + 1; b < m.size(); ++b) {
        out.push_back(angular_difference(truth[m[a]], truth[m[b]]) * kRadToDeg);
      }
    }
  }

  AngularHistogram h;
  std::vector<double> all;
  for (const auto& c : per_cluster) {
    for (double deg : c) {
      ++h.counts[static_cast<std::size_t>(bin_of(deg))];
      h.max_deg = std::max(h.max_deg, deg);
    }
    all.insert(all.end(), c.begin(), c.end());
  }
  h.pairs = all.size();
  h.median_deg = median_of(std::move(all));
  return h;
}

Occupancy occupancy_from_sizes(std::vector<std::size_t> sizes) {
  Occupancy o;
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  o.sizes = std::move(sizes);
  if (o.sizes.empty()) return o;
  double mean = 0.0;
  for (auto s : o.sizes) mean += static_cast<double>(s);
  mean /= static_cast<double>(o.sizes.size());
  double var = 0.0;
  for (auto s : o.sizes) var += (static_cast<double>(s) - mean) * (static_cast<double>(s) - mean);
  var /= static_cast<double>(o.sizes.size());
  o.cv = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
  return o;
}

Occupancy occupancy_curve(std::span<const Assignment> assignments, int k) {
  return occupancy_from_sizes(sizes_of(assignments, k));
}

std::vector<int> largest_clusters(std::span<const Assignment> assignments, int k, std::size_t top) {
  const auto sizes = sizes_of(assignments, k);
  if (top > sizes.size()) throw Error(Errc::invalid_argument, "top exceeds k");
  std::vector<int> order(sizes.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return sizes[static_cast<std::size_t>(a)] > sizes[static_cast<std::size_t>(b)];
  });
  order.resize(top);
  return order;
}

Pgm to_gray16(const Image& image) {
  Pgm pgm;
  pgm.width = pgm.height = image.size();
  pgm.pixels.resize(image.pixel_count());
  const auto px = image.pixels();
  if (px.empty()) return pgm;
  const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
  const double range = *hi - *lo;
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (!(range > 0.0)) {
      pgm.pixels[i] = 32768;
    } else {
      pgm.pixels[i] = static_cast<std::uint16_t>(std::lround((px[i] - *lo) / range * 65535.0));
    }
  }
  return pgm;
}

void write_pgm(const std::filesystem::path& path, const Pgm& pgm) {
  if (pgm.pixels.size() != pgm.width * pgm.height) throw Error(Errc::shape, "PGM pixel count mismatch");
  auto out = open_out(path);
  out << "P5\n" << pgm.width << ' ' << pgm.height << '\n' << pgm.maxval << '\n';
  std::vector<unsigned char> bytes(pgm.pixels.size() * 2);
  for (std::size_t i = 0; i < pgm.pixels.size(); ++i) {
    bytes[2 * i] = static_cast<unsigned char>(pgm.pixels[i] >> 8);
    bytes[2 * i + 1] = static_cast<unsigned char>(pgm.pixels[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

Pgm read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::string magic;
  Pgm pgm;
  in >> magic >> pgm.width >> pgm.height >> pgm.maxval;
  if (!in || magic != "P5") throw Error(Errc::data, path.string() + ": not a binary PGM");
  if (pgm.maxval < 256 || pgm.maxval > 65535) throw Error(Errc::data, path.string() + ": expected a 16-bit PGM");
  in.get();
  std::vector<unsigned char> bytes(pgm.width * pgm.height * 2);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw Error(Errc::io, path.string() + ": truncated");
  pgm.pixels.resize(pgm.width * pgm.height);
  for (std::size_t i = 0; i < pgm.pixels.size(); ++i) {
    pgm.pixels[i] = static_cast<std::uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]);
  }
  return pgm;
}

std::vector<std::filesystem::path> centroid_panel(const ClusterModel& model, std::size_t top,
                                                  const std::filesystem::path& dir) {
  const auto order = largest_clusters(model.assignments, static_cast<int>(model.centroids.size()), top);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    char name[32];
    std::snprintf(name, sizeof name, "centroid_%03zu.pgm", rank);
    out.push_back(dir / name);
    write_pgm(out.back(), to_gray16(model.centroids[static_cast<std::size_t>(order[rank])]));
  }
  return out;
}

std::vector<ScatterRow> noise_scatter(const ProjectionSet& set, std::size_t reference, int rotations,
                                      const WaveletConfig& wavelet) {
  if (!set.has_clean()) throw Error(Errc::data, "dataset has no clean stack");
  if (reference >= set.count()) throw Error(Errc::invalid_argument, "reference index out of range");
  if (set.orientations.size() != set.count()) throw Error(Errc::data, "dataset orientations missing");
  const RotationGrid grid(rotations);
  const double ps = set.pixel_size();
  const Image& ref = set.clean[reference];
  const RotatedStack l2(ref, grid, Metric::l2, ps, static_cast<long>(reference));
  const RotatedStack w1(ref, grid, Metric::wemd, ps, static_cast<long>(reference), wavelet);

  std::vector<ScatterRow> rows(set.count());
  const auto count = static_cast<std::ptrdiff_t>(set.count());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    rows[idx] = {idx, angular_difference(set.orientations[reference], set.orientations[idx]) * kRadToDeg,
                 rotinv_distance(Metric::l2, l2, set.images[idx]).distance,
                 rotinv_distance(Metric::wemd, w1, set.images[idx]).distance};
  }
  return rows;
}

void write_scatter_csv(const std::filesystem::path& path, std::span<const ScatterRow> rows) {
  auto out = open_out(path);
  out << "image_id,angle_deg,d_l2,d_w1\n";
  for (const auto& r : rows) out << r.image << ',' << fmt(r.angle_deg) << ',' << fmt(r.d_l2) << ',' << fmt(r.d_w1) << '\n';
  if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

RunTiming run_timing(const ClusterModel& model, std::string label) {
  RunTiming t;
  t.label = std::move(label);
  t.metric = std::string(metric_name(model.params.metric));
  t.iterations = model.iterations;
  if (!model.timing.empty()) {
    for (const auto& p : model.timing) {
      t.assign_seconds += p.assign_seconds;
      t.update_seconds += p.update_seconds;
    }
    t.assign_seconds /= static_cast<double>(model.timing.size());
    t.update_seconds /= static_cast<double>(model.timing.size());
  }
  return t;
}

TimingReport timing_report(std::span<const RunTiming> runs) {
  TimingReport r;
  r.runs.assign(runs.begin(), runs.end());
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& t : runs) {
    acc[t.metric].first += t.per_iteration();
    ++acc[t.metric].second;
  }
  if (acc.count("l2")) r.mean_l2 = acc["l2"].first / acc["l2"].second;
  if (acc.count("wemd")) r.mean_wemd = acc["wemd"].first / acc["wemd"].second;
  if (r.mean_l2 && r.mean_wemd && *r.mean_l2 > 0.0) r.wemd_over_l2 = *r.mean_wemd / *r.mean_l2;
  return r;
}

void write_timing_csv(const std::filesystem::path& path, const TimingReport& report) {
  auto out = open_out(path);
  out << "label,metric,iterations,assign_seconds,update_seconds,per_iteration_seconds\n";
  for (const auto& t : report.runs) {
    out << t.label << ',' << t.metric << ',' << t.iterations << ',' << fmt(t.assign_seconds) << ','
        << fmt(t.update_seconds) << ',' << fmt(t.per_iteration()) << '\n';
  }
  if (report.mean_l2) out << "mean,l2,," << ",," << fmt(*report.mean_l2) << '\n';
  if (report.mean_wemd) out << "mean,wemd,," << ",," << fmt(*report.mean_wemd) << '\n';
  if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

nlohmann::json to_json(const TimingReport& report) {
  nlohmann::json j;
  j["runs"] = nlohmann::json::array();
  for (const auto& t : report.runs) {
    j["runs"].push_back({{"label", t.label},
                         {"metric", t.metric},
                         {"iterations", t.iterations},
                         {"assign_seconds", t.assign_seconds},
                         {"update_seconds", t.update_seconds},
                         {"per_iteration_seconds", t.per_iteration()}});
  }
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j["mean_per_iteration_l2"] = opt(report.mean_l2);
  j["mean_per_iteration_wemd"] = opt(report.mean_wemd);
  j["wemd_over_l2"] = opt(report.wemd_over_l2);
  return j;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::shape, "spearman inputs differ in length");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (x.size() < 2) return nan;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return nan;
  return sxy / std::sqrt(sxx * syy);
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(Errc::shape, "label vectors differ in length");
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++cells[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, v] : cells) index += choose2(v);
  for (const auto& [key, v] : rows) sum_rows += choose2(v);
  for (const auto& [key, v] : cols) sum_cols += choose2(v);
  const double total = choose2(static_cast<double>(a.size()));
  if (total == 0.0) return 1.0;
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

EvalReport evaluate(const ProjectionSet& set, const ClusterModel& model) {
  if (set.count() != model.assignments.size()) {
    throw Error(Errc::data, "dataset has " + std::to_string(set.count()) + " images but the run assigns " +
                                std::to_string(model.assignments.size()));
  }
  EvalReport r;
  r.k = static_cast<int>(model.centroids.size());
  r.n = set.count();
  r.metric = std::string(metric_name(model.params.metric));
  r.histogram = angular_coherence(model.assignments, r.k, set.orientations);
  r.occupancy = occupancy_curve(model.assignments, r.k);
  const RunTiming t = run_timing(model, r.metric);
  r.timing = timing_report(std::span<const RunTiming>(&t, 1));
  return r;
}

void write_report(const EvalReport& report, const ClusterModel& model, std::size_t top,
                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());

  const auto& h = report.histogram;
  {
    auto out = open_out(dir / "angular_histogram.csv");
    out << "bin_start_deg,bin_end_deg,count,fraction\n";
    for (int b = 0; b < kAngularBins; ++b) {
      const auto c = h.counts[static_cast<std::size_t>(b)];
      const double frac = h.pairs ? static_cast<double>(c) / static_cast<double>(h.pairs) : 0.0;
      out << fmt(h.bin_start(b)) << ',' << fmt(h.bin_end(b)) << ',' << c << ',' << fmt(frac) << '\n';
    }
  }
  {
    auto out = open_out(dir / "occupancy.csv");
    out << "rank,size\n";
    for (std::size_t i = 0; i < report.occupancy.sizes.size(); ++i) out << i + 1 << ',' << report.occupancy.sizes[i] << '\n';
  }
  write_timing_csv(dir / "timing.csv", report.timing);

  const auto pgms = centroid_panel(model, top, dir);

  nlohmann::json j;
  j["metric"] = report.metric;
  j["n"] = report.n;
  j["k"] = report.k;
  j["pairs"] = h.pairs;
  j["median_angle_deg"] = h.median_deg ? nlohmann::json(*h.median_deg) : nlohmann::json(nullptr);
  j["max_angle_deg"] = h.max_deg;
  j["mass_above_170_deg"] = h.counts[34] + h.counts[35];
  j["angular_histogram"] = {{"bin_width_deg", kAngularBinWidthDeg}, {"counts", h.counts}};
  j["occupancy"] = {{"sizes", report.occupancy.sizes}, {"cv", report.occupancy.cv}};
  j["timing"] = to_json(report.timing);
  j["iterations"] = model.iterations;
  j["loss_trace"] = model.loss_trace;
  j["centroid_panel"] = nlohmann::json::array();
  for (const auto& p : pgms) j["centroid_panel"].push_back(p.filename().string());
  auto out = open_out(dir / "report.json");
  out << j.dump(1) << '\n';
}

ReparsedSummary reparse_report(const std::filesystem::path& dir) {
  ReparsedSummary s;
  try {
    for (const auto& row : read_csv(dir / "angular_histogram.csv")) s.counts.push_back(std::stoull(row.at(2)));
    std::vector<std::size_t> sizes;
    for (const auto& row : read_csv(dir / "occupancy.csv")) sizes.push_back(std::stoull(row.at(1)));
    const Occupancy o = occupancy_from_sizes(sizes);
    s.sizes = o.sizes;
    s.cv = o.cv;
  } catch (const std::logic_error& e) {
    throw Error(Errc::data, dir.string() + ": malformed CSV (" + e.what() + ")");
  }
  std::ifstream in(dir / "report.json");
  if (!in) throw Error(Errc::io, "cannot open " + (dir / "report.json").string());
  try {
    nlohmann::json j;
    in >> j;
    if (!j.at("median_angle_deg").is_null()) s.median_deg = j["median_angle_deg"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::data, std::string("report.json: ") + e.what());
  }
  return s;
}

Image random_density(std::size_t size, std::uint64_t seed, std::uint64_t index) {
  auto rng = derived_rng(seed, index, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> bumps(1, 4);
  Image img(size);
  const int count = bumps(rng);
  for (int b = 0; b < count; ++b) {
    const double cx = unit(rng) * 1.6 - 0.8, cy = unit(rng) * 1.6 - 0.8;
    const double w = 0.08 + 0.4 * unit(rng);
    const double amp = 0.2 + unit(rng);
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = 0; c < size; ++c) {
        const double dx = grid_coordinate(c, size) - cx, dy = grid_coordinate(r, size) - cy;
        img(r, c) += amp * std::exp(-0.5 * (dx * dx + dy * dy) / (w * w));
      }
    }
  }
  const double floor = 0.02 * unit(rng);
  double peak = 0.0;
  for (double v : img.pixels()) peak = std::max(peak, v);
  for (double& v : img.pixels()) v += floor * peak * unit(rng);
  return img.normalized();
}

OracleReport oracle_envelope(std::size_t size, std::size_t pairs, std::uint64_t seed, bool inject_identical,
                             const WaveletConfig& wavelet) {
  if (size > kExactSizeCap) {
    throw Error(Errc::size_cap, "oracle size " + std::to_string(size) + " exceeds " + std::to_string(kExactSizeCap));
  }
  if (size < 8) throw Error(Errc::invalid_argument, "oracle size must be at least 8");
  if (pairs < 1) throw Error(Errc::invalid_argument, "at least one pair is required");
  OracleReport report;
  report.size = size;
  report.seed = seed;
  report.rows.resize(pairs);
  const double ps = pixel_size_for(size);
  const auto count = static_cast<std::ptrdiff_t>(pairs);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t p = 0; p < count; ++p) {
    const auto i = static_cast<std::uint64_t>(p);
    const Image a = random_density(size, seed, 2 * i);
    const Image b = (inject_identical && p == 0) ? a : random_density(size, seed, 2 * i + 1);
    OraclePair row;
    row.pair = static_cast<std::size_t>(p);
    row.exact_w1 = exact_wp(a, b, 1, ps).distance;
    row.approx_w1 = approx_w1(dwt2(a, wavelet), dwt2(b, wavelet), ps);
    if (row.approx_w1 > 0.0 && row.exact_w1 > 0.0) row.ratio = row.exact_w1 / row.approx_w1;
    report.rows[static_cast<std::size_t>(p)] = row;
  }
  bool first = true;
  for (const auto& row : report.rows) {
    if (!row.ratio) {
      report.skipped.push_back(row.pair);
      continue;
    }
    report.c = first ? *row.ratio : std::min(report.c, *row.ratio);
    report.C = first ? *row.ratio : std::max(report.C, *row.ratio);
    first = false;
  }
  return report;
}

nlohmann::json to_json(const OracleReport& report) {
  nlohmann::json j;
  j["size"] = report.size;
  j["seed"] = report.seed;
  j["pairs"] = report.rows.size();
  const bool any = report.skipped.size() < report.rows.size();
  j["c"] = any ? nlohmann::json(report.c) : nlohmann::json(nullptr);
  j["C"] = any ? nlohmann::json(report.C) : nlohmann::json(nullptr);
  j["spread"] = any ? nlohmann::json(report.C / report.c) : nlohmann::json(nullptr);
  j["skipped"] = report.skipped;
  if (!report.skipped.empty()) j["note"] = "pairs with zero exact and approximate distance have no ratio and are skipped";
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"pair", r.pair},
                         {"exact_w1", r.exact_w1},
                         {"approx_w1", r.approx_w1},
                         {"ratio", r.ratio ? nlohmann::json(*r.ratio) : nlohmann::json(nullptr)}});
  }
  return j;
}

}  // namespace wkm
