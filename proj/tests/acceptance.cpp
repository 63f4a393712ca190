// Acceptance run: one PASS/FAIL line per criterion.
//
//   wkm_acceptance [--work DIR] [criterion numbers...]
//
// Exits 0 only when every selected criterion passes.

#include "support.hpp"
#include "wkm/cli.hpp"
#include "wkm/cluster.hpp"
#include "wkm/dataset.hpp"
#include "wkm/evalrep.hpp"
#include "wkm/metrics.hpp"
#include "wkm/phantom.hpp"
#include "wkm/projection.hpp"
#include "wkm/transport.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

using namespace wkm;
namespace fs = std::filesystem;

namespace {

const std::string kPhantom = WKM_SOURCE_DIR "/specs/ribo-like.json";

// Scaled replication settings shared by criteria 7, 9 and 10.
constexpr int kReplicationLevels = 4;
constexpr int kReplicationRotations = 100;
constexpr int kReplicationK = 40;
// Rotation grid for the single-pair checks: steps of pi/100.
constexpr int kFullRotations = 200;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

void info(const std::string& line) { std::cout << "  info: " << line << std::endl; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int wkm_run(std::vector<std::string> args) {
  args.insert(args.begin(), "wkm");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  // The CLI reports progress on stdout; keep the acceptance log to one line per criterion.
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  const int code = cli::run(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  if (code != 0) std::cerr << "wkm " << args[1] << " exited with " << code << '\n';
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool non_increasing(const std::vector<double>& trace) {
  for (std::size_t t = 1; t < trace.size(); ++t)
    if (trace[t] > trace[t - 1]) return false;
  return true;
}

std::vector<int> labels_of(const ClusterModel& m) {
  std::vector<int> out;
  for (const auto& a : m.assignments) out.push_back(a.cluster);
  return out;
}

class Acceptance {
 public:
  explicit Acceptance(fs::path work) : work_(std::move(work)) { fs::create_directories(work_); }

  Outcome oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    const OracleReport a = oracle_envelope(16, 100, 7);
    const OracleReport b = oracle_envelope(16, 100, 7);
    const double elapsed = seconds_since(t0) / 2.0;
    const std::string ja = to_json(a).dump(1), jb = to_json(b).dump(1);
    std::ofstream(work_ / "oracle_envelope.json") << ja << '\n';
    const bool stable = ja == jb;
    const double spread = a.C / a.c;
    const OracleReport sym = oracle_envelope(16, 100, 7, false, {kDefaultLevels, Boundary::symmetric});
    info("symmetric extension: c=" + fmt(sym.c) + " C=" + fmt(sym.C) + " C/c=" + fmt(sym.C / sym.c));
    return {a.rows.size() == 100 && a.skipped.empty() && spread <= 20.0 && stable && elapsed <= 300.0,
            "c=" + fmt(a.c) + " C=" + fmt(a.C) + " C/c=" + fmt(spread) + " (<= 20), rerun " +
                (stable ? "bit-identical" : "DIFFERS") + ", " + fmt(elapsed, 3) + " s"};
  }

  // Clean 32x32 projections of the 32^3 phantom at random viewing directions.
  struct ProjectionPairs {
    std::vector<Image> first, second;  // unit mass
    std::vector<double> angle;
    double pixel_size = 0.0;
    double gradient_bound = 0.0;  // B for the unit-mass density on [-1, 1]^3
  };

  const ProjectionPairs& projection_pairs() {
    if (pairs_) return *pairs_;
    constexpr std::size_t side = 32, count = 50;
    const Volume vol = load_phantom(read_phantom_spec(kPhantom, side));
    ProjectionPairs p;
    p.pixel_size = pixel_size_for(side);
    for (std::size_t i = 0; i < count; ++i) {
      auto rng = derived_rng(2024, i, 3);
      const Orientation u = sample_orientation(rng), v = sample_orientation(rng);
      p.first.push_back(project(vol, u, side).normalized());
      p.second.push_back(project(vol, v, side).normalized());
      p.angle.push_back(angular_difference(u, v));
    }
    // Central differences of rho = vol / (mass * h^3).
    const double h = vol.voxel_size();
    const double scale = 1.0 / (vol.mass() * h * h * h);
    for (std::size_t z = 1; z + 1 < side; ++z) {
      for (std::size_t y = 1; y + 1 < side; ++y) {
        for (std::size_t x = 1; x + 1 < side; ++x) {
          const double gx = vol(x + 1, y, z) - vol(x - 1, y, z);
          const double gy = vol(x, y + 1, z) - vol(x, y - 1, z);
          const double gz = vol(x, y, z + 1) - vol(x, y, z - 1);
          p.gradient_bound = std::max(p.gradient_bound, scale * std::hypot(gx, gy, gz) / (2.0 * h));
        }
      }
    }
    pairs_ = std::move(p);
    return *pairs_;
  }

  Outcome w1_angle_bound() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& p = projection_pairs();
    constexpr int rotations = 12;
    const auto n = static_cast<std::ptrdiff_t>(p.first.size());
    std::vector<double> dist(p.first.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      dist[k] = exact_w1_rotinv(p.first[k], p.second[k], rotations, p.pixel_size);
    }
    int failures = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      const double bound = 1.1 * 2.0 * std::sin(p.angle[i] / 2.0) + 4.0 * p.pixel_size;
      failures += dist[i] > bound;
      worst = std::max(worst, dist[i] / bound);
    }
    const double elapsed = seconds_since(t0);
    return {failures == 0 && elapsed <= 600.0,
            std::to_string(dist.size() - static_cast<std::size_t>(failures)) + "/" + std::to_string(dist.size()) +
                " pairs within 1.1*2sin(a/2)+4ps (m=" + std::to_string(rotations) + "), worst d/bound=" + fmt(worst) +
                ", " + fmt(elapsed, 3) + " s"};
  }

  Outcome l2_angle_bound() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& p = projection_pairs();
    const double area = p.pixel_size * p.pixel_size;
    const double B = p.gradient_bound;
    int failures = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < p.first.size(); ++i) {
      // Unit-mass images as densities on [-1, 1]^2.
      Image a = p.first[i], b = p.second[i];
      for (double& v : a.pixels()) v /= area;
      for (double& v : b.pixels()) v /= area;
      const double d = rotinv_l2(a, b, kFullRotations, p.pixel_size);
      const double bound = 1.1 * 2.0 * std::sqrt(std::numbers::pi) * B * p.angle[i] + 4.0 * p.pixel_size * B;
      failures += d > bound;
      worst = std::max(worst, d / bound);
    }
    const double elapsed = seconds_since(t0);
    return {failures == 0 && elapsed <= 120.0,
            std::to_string(p.first.size() - static_cast<std::size_t>(failures)) + "/" +
                std::to_string(p.first.size()) + " pairs within 1.1*2sqrt(pi)*B*a+4ps*B, B=" + fmt(B) +
                ", worst d/bound=" + fmt(worst) + ", " + fmt(elapsed, 3) + " s"};
  }

  Outcome jensen_corollary() {
    constexpr std::size_t side = 8;
    const double ps = pixel_size_for(side);
    std::mt19937_64 rng(404);
    int violations = 0, lower_ok = 0, upper_ok = 0;
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const Image a = test::random_disc_density(side, rng), b = test::random_disc_density(side, rng);
      const double w1 = exact_wp(a, b, 1, ps).distance, w2 = exact_wp(a, b, 2, ps).distance;
      violations += w2 > w1 * w1 + 1e-7;
      worst = std::max(worst, w2 - w1 * w1);
      lower_ok += w1 * w1 <= w2 + 1e-12;
      upper_ok += w2 <= 2.0 * w1 + 1e-12;  // disc diameter 2
    }
    info("reverse chain W1^2 <= W2obj <= 2*W1 holds on " + std::to_string(std::min(lower_ok, upper_ok)) + "/50 pairs");
    return {violations == 0, std::to_string(50 - violations) + "/50 pairs with W2obj <= W1^2 + 1e-7, largest excess " +
                                 fmt(worst) + " (Jensen gives W2obj >= W1^2)"};
  }

  Outcome metric_axioms() {
    std::mt19937_64 rng(505);
    std::vector<std::string> broken;
    // Exact W1 on 8x8.
    {
      const double ps = pixel_size_for(8);
      int bad = 0;
      for (int t = 0; t < 200; ++t) {
        const Image a = test::random_density(8, rng), b = test::random_density(8, rng), c = test::random_density(8, rng);
        const double ab = exact_wp(a, b, 1, ps).distance, ba = exact_wp(b, a, 1, ps).distance;
        const double bc = exact_wp(b, c, 1, ps).distance, ac = exact_wp(a, c, 1, ps).distance;
        const double aa = exact_wp(a, a, 1, ps).distance;
        bad += !(ab >= 0.0 && aa <= 1e-7 && std::abs(ab - ba) <= 1e-7 && ac <= ab + bc + 1e-7);
      }
      if (bad) broken.push_back("exact W1 " + std::to_string(bad));
    }
    // Wavelet W1 on 64x64.
    {
      const double ps = pixel_size_for(64);
      int bad = 0;
      for (int t = 0; t < 200; ++t) {
        const auto a = dwt2(test::random_density(64, rng)), b = dwt2(test::random_density(64, rng)),
                   c = dwt2(test::random_density(64, rng));
        const double ab = approx_w1(a, b, ps), ba = approx_w1(b, a, ps), bc = approx_w1(b, c, ps),
                     ac = approx_w1(a, c, ps), aa = approx_w1(a, a, ps);
        bad += !(ab > 0.0 && aa == 0.0 && ab == ba && ac <= (ab + bc) * (1.0 + 1e-12));
      }
      if (bad) broken.push_back("wavelet W1 " + std::to_string(bad));
    }
    // Viewing-angle difference.
    {
      int bad = 0;
      for (int t = 0; t < 200; ++t) {
        const Orientation u = sample_orientation(rng), v = sample_orientation(rng), w = sample_orientation(rng);
        const double uv = angular_difference(u, v), vu = angular_difference(v, u), vw = angular_difference(v, w),
                     uw = angular_difference(u, w);
        bad += !(uv >= 0.0 && uv <= std::numbers::pi && angular_difference(u, u) == 0.0 && uv == vu &&
                 uw <= uv + vw + 1e-12);
      }
      if (bad) broken.push_back("angular difference " + std::to_string(bad));
    }
    std::string detail = "200 triples each for exact W1 (8x8), wavelet W1 (64x64), angular difference";
    for (const auto& b : broken) detail += "; failing " + b;
    return {broken.empty(), detail};
  }

  Outcome clustering_correctness() {
    const auto toy = test::three_blob_set(10, 16, 1);
    int perfect = 0, runs = 0, monotone = 0;
    for (Metric metric : {Metric::l2, Metric::wemd}) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ClusterParams p;
        p.metric = metric;
        p.k = 3;
        p.rotations = 8;
        p.seed = seed;
        const ClusterModel m = fit(toy.images, p, pixel_size_for(16));
        ++runs;
        perfect += adjusted_rand_index(labels_of(m), toy.labels) == 1.0;
        monotone += non_increasing(m.loss_trace);
      }
    }
    // Center 0 chosen first; candidates at distance d, 2d and 0.
    Image zero(8), near(8), far(8);
    near(3, 3) = 1.0;
    far(3, 3) = 2.0;
    const std::vector<Image> data{zero, near, far, zero};
    std::array<int, 4> hits{};
    constexpr int draws = 10000;
    for (int s = 0; s < draws; ++s) {
      ++hits[kmeanspp_indices(data, 2, Metric::l2, 1, static_cast<std::uint64_t>(s), 1.0, {}, 0)[1]];
    }
    const double half = 2.576 * std::sqrt(0.2 * 0.8 / draws);
    const double f1 = hits[1] / static_cast<double>(draws), f2 = hits[2] / static_cast<double>(draws);
    const bool freq_ok = std::abs(f1 - 0.2) <= half && std::abs(f2 - 0.8) <= half && hits[3] == 0 && hits[0] == 0;
    return {perfect == runs && monotone == runs && freq_ok,
            "ARI 1.0 in " + std::to_string(perfect) + "/" + std::to_string(runs) + " runs, loss non-increasing in " +
                std::to_string(monotone) + "/" + std::to_string(runs) + ", k-means++ frequencies " + fmt(f1) + "/" +
                fmt(f2) + "/" + fmt(hits[3] / static_cast<double>(draws)) + " vs 0.2/0.8/0 (+-" + fmt(half, 3) + ")"};
  }

  // Criterion-7 workload; criteria 9 and 10 reuse it.
  struct Replication {
    std::map<std::string, std::vector<ClusterModel>> models;  // by metric name, seeds 1..3
    std::map<std::string, std::vector<EvalReport>> reports;
    double seconds = 0.0;
    bool ok = false;
  };

  fs::path replication_data() {
    const fs::path data = work_ / "replication_data";
    if (!fs::exists(data / "meta.json")) {
      wkm_run({"gen", "--phantom", kPhantom, "--volume-side", "64", "--n", "2000", "--size", "64", "--snr", "0.125",
               "--seed", "42", "--out", data.string()});
    }
    return data;
  }

  std::vector<std::string> cluster_args(const fs::path& data, const std::string& metric, int seed, int threads,
                                        const fs::path& out) {
    return {"cluster",     "--dataset", data.string(), "--metric", metric, "--k", std::to_string(kReplicationK),
            "--rotations", std::to_string(kReplicationRotations), "--levels", std::to_string(kReplicationLevels),
            "--seed",      std::to_string(seed), "--threads", std::to_string(threads), "--out", out.string()};
  }

  const Replication& replication() {
    if (replication_) return *replication_;
    Replication r;
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path data = replication_data();
    r.ok = fs::exists(data / "meta.json");
    const ProjectionSet set = r.ok ? load_dataset(data) : ProjectionSet{};
    for (int seed = 1; r.ok && seed <= 3; ++seed) {
      for (const std::string metric : {"l2", "wemd"}) {
        const fs::path out = work_ / ("replication_" + metric + "_" + std::to_string(seed));
        if (wkm_run(cluster_args(data, metric, seed, 8, out)) != 0) {
          r.ok = false;
          break;
        }
        r.models[metric].push_back(load_run(out));
        r.reports[metric].push_back(evaluate(set, r.models[metric].back()));
      }
    }
    r.seconds = seconds_since(t0);
    replication_ = std::move(r);
    return *replication_;
  }

  Outcome scaled_replication() {
    const Replication& r = replication();
    if (!r.ok) return {false, "replication runs did not complete"};
    int median_wins = 0, cv_wins = 0;
    std::string detail;
    bool monotone = true, antipodes = true;
    for (std::size_t s = 0; s < 3; ++s) {
      const auto& l2 = r.reports.at("l2")[s];
      const auto& w1 = r.reports.at("wemd")[s];
      median_wins += *w1.histogram.median_deg < *l2.histogram.median_deg;
      cv_wins += w1.occupancy.cv < l2.occupancy.cv;
      detail += " seed " + std::to_string(s + 1) + ": median " + fmt(*w1.histogram.median_deg) + " vs " +
                fmt(*l2.histogram.median_deg) + " deg, CV " + fmt(w1.occupancy.cv) + " vs " + fmt(l2.occupancy.cv) +
                ";";
      for (const auto* rep : {&l2, &w1}) antipodes = antipodes && rep->histogram.max_deg > 170.0;
      for (const auto& m : {r.models.at("l2")[s], r.models.at("wemd")[s]})
        monotone = monotone && non_increasing(m.loss_trace);
    }
    info(std::string("loss traces non-increasing in all replication runs: ") + (monotone ? "yes" : "no"));
    info(std::string("histogram mass above 170 deg in every run: ") + (antipodes ? "yes" : "no"));
    return {median_wins >= 2 && cv_wins >= 2 && r.seconds <= 45.0 * 60.0,
            "wemd vs l2 (J=" + std::to_string(kReplicationLevels) + "), median wins " + std::to_string(median_wins) +
                "/3, CV wins " + std::to_string(cv_wins) + "/3;" + detail + " " + fmt(r.seconds, 4) + " s"};
  }

  Outcome noise_correlation() {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path data = work_ / "scatter_data";
    if (!fs::exists(data / "meta.json")) {
      wkm_run({"gen", "--phantom", kPhantom, "--volume-side", "64", "--n", "200", "--size", "64", "--snr", "0.0625",
               "--seed", "5", "--out", data.string()});
    }
    const ProjectionSet set = load_dataset(data);
    auto correlations = [&](std::size_t ref, const WaveletConfig& wavelet) {
      const auto rows = noise_scatter(set, ref, kFullRotations, wavelet);
      std::vector<double> angle, l2, w1;
      for (const auto& row : rows) {
        if (row.angle_deg > 90.0) continue;
        angle.push_back(row.angle_deg);
        l2.push_back(row.d_l2);
        w1.push_back(row.d_w1);
      }
      return std::pair{spearman(angle, l2), spearman(angle, w1)};
    };
    const WaveletConfig wavelet{kReplicationLevels, Boundary::zero};
    const auto [s_l2, s_w1] = correlations(0, wavelet);
    const double elapsed = seconds_since(t0);
    const auto [j6_l2, j6_w1] = correlations(0, {kDefaultLevels, Boundary::zero});
    info("reference 0 at J=6: l2 " + fmt(j6_l2) + ", wemd " + fmt(j6_w1));
    int wins = 0;
    std::string per_ref;
    for (std::size_t ref = 0; ref < 8; ++ref) {
      const auto [l2, w1] = correlations(ref, wavelet);
      wins += w1 > l2;
      per_ref += " " + fmt(w1 - l2, 2);
    }
    info("references 0-7: wemd ahead in " + std::to_string(wins) + "/8, differences" + per_ref);
    return {s_w1 > s_l2 && elapsed <= 300.0, "Spearman (<= 90 deg, reference 0, J=" +
                                                 std::to_string(kReplicationLevels) + ") wemd " + fmt(s_w1) +
                                                 " vs l2 " + fmt(s_l2) + ", " + fmt(elapsed, 3) + " s"};
  }

  Outcome timing_sanity() {
    const Replication& r = replication();
    if (!r.ok) return {false, "replication runs did not complete"};
    std::vector<RunTiming> runs;
    for (const auto& [metric, models] : r.models)
      for (const auto& m : models) runs.push_back(run_timing(m, metric));
    const TimingReport t = timing_report(runs);
    const double ratio = *t.wemd_over_l2;
    return {ratio <= 2.5, "per-iteration seconds wemd " + fmt(*t.mean_wemd) + " / l2 " + fmt(*t.mean_l2) + " = " +
                              fmt(ratio) + " (<= 2.5)"};
  }

  Outcome determinism() {
    const Replication& r = replication();
    if (!r.ok) return {false, "replication runs did not complete"};
    const fs::path data = replication_data();
    bool same = true;
    std::string detail;
    for (const std::string metric : {"l2", "wemd"}) {
      const fs::path one = work_ / ("threads1_" + metric), eight = work_ / ("threads8_" + metric);
      if (wkm_run(cluster_args(data, metric, 1, 1, one)) != 0 || wkm_run(cluster_args(data, metric, 1, 8, eight)) != 0)
        return {false, "cluster run failed"};
      const bool eq = slurp(one / "assignments.csv") == slurp(eight / "assignments.csv") &&
                      slurp(one / "centroids.f32") == slurp(eight / "centroids.f32");
      same = same && eq;
      detail += metric + (eq ? " identical" : " DIFFERS") + "; ";
    }
    return {same, detail + "assignments.csv and centroids.f32 compared for --threads 1 vs 8"};
  }

 private:
  fs::path work_;
  std::optional<ProjectionPairs> pairs_;
  std::optional<Replication> replication_;
};

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "wkm_acceptance";
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      selected.insert(std::stoi(arg));
    }
  }
  Acceptance acc(work);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence envelope", [&] { return acc.oracle_equivalence(); }},
      {"rotation-invariant W1 vs viewing angle", [&] { return acc.w1_angle_bound(); }},
      {"rotation-invariant L2 vs viewing angle", [&] { return acc.l2_angle_bound(); }},
      {"W2 objective <= W1 objective squared", [&] { return acc.jensen_corollary(); }},
      {"metric axioms", [&] { return acc.metric_axioms(); }},
      {"clustering correctness", [&] { return acc.clustering_correctness(); }},
      {"scaled replication of angular coherence and occupancy", [&] { return acc.scaled_replication(); }},
      {"distance vs angle under noise", [&] { return acc.noise_correlation(); }},
      {"timing ratio", [&] { return acc.timing_sanity(); }},
      {"thread-count determinism", [&] { return acc.determinism(); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " [" << criteria[i].first
              << "] " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
