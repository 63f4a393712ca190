#include "wkm/cli.hpp"

#include "wkm/cluster.hpp"
#include "wkm/dataset.hpp"
#include "wkm/error.hpp"
#include "wkm/evalrep.hpp"
#include "wkm/metrics.hpp"
#include "wkm/mrc.hpp"
#include "wkm/phantom.hpp"
#include "wkm/transport.hpp"

#include <algorithm>
#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

namespace wkm::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One configurable parameter: its CLI option and how it maps to config JSON.
struct Field {
  std::string key;
  CLI::Option* option;
  std::function<void(const json&)> load;
  std::function<json()> dump;
};

struct Command {
  Command(std::string command, CLI::App* sub) : name(std::move(command)), app(sub) {}

  std::string name;
  CLI::App* app;
  std::vector<Field> fields;
  std::string config_path;

  template <class T>
  void option(const std::string& flag, const std::string& key, T& var, const std::string& help) {
    fields.push_back({key, app->add_option(flag, var, help)->capture_default_str(),
                      [&var](const json& j) { var = j.get<T>(); }, [&var] { return json(var); }});
  }
  void flag(const std::string& flag, const std::string& key, bool& var, const std::string& help) {
    fields.push_back({key, app->add_flag(flag, var, help), [&var](const json& j) { var = j.get<bool>(); },
                      [&var] { return json(var); }});
  }

  void add_config_option() {
    app->add_option("--config", config_path, "JSON config; explicit flags take precedence");
  }

  // Fills every parameter not given on the command line from --config.
  void apply_config() {
    if (config_path.empty()) return;
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot open config " + config_path);
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw UsageError(config_path + ": " + e.what());
    }
    if (!doc.is_object()) throw UsageError(config_path + ": config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "command") {
        if (value != name) throw UsageError(config_path + ": config is for '" + value.dump() + "', not '" + name + "'");
        continue;
      }
      auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.key == key; });
      if (it == fields.end()) throw UsageError(config_path + ": unknown key '" + key + "'");
      if (it->option->count() > 0) continue;
      try {
        it->load(value);
      } catch (const json::exception& e) {
        throw UsageError(config_path + ": bad value for '" + key + "': " + e.what());
      }
    }
  }

  json resolved() const {
    json j;
    j["command"] = name;
    for (const auto& f : fields) j[f.key] = f.dump();
    return j;
  }
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot create " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

void prepare_out(const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(Errc::io, "cannot create " + out + ": " + ec.message());
}

int available_cores() { return std::max(1, omp_get_num_procs()); }

void set_threads(int threads) {
  if (threads < 1) throw UsageError("--threads must be at least 1");
  omp_set_num_threads(threads);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct WaveletArgs {
  int levels = kDefaultLevels;
  std::string boundary = "zero";

  void add_to(Command& cmd) {
    cmd.option("--levels", "levels", levels, "Wavelet decomposition depth J");
    cmd.option("--wavelet-boundary", "wavelet_boundary", boundary, "zero or symmetric");
  }
  WaveletConfig config() const {
    if (levels < 1) throw UsageError("--levels must be at least 1");
    try {
      return {levels, parse_boundary(boundary)};
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
};

struct GenArgs {
  std::string phantom, mrc, out;
  std::size_t n = 0, size = 64, volume_side = 64;
  double snr = 0.0;
  std::uint64_t seed = 0;
  int threads = available_cores();
  bool no_clean = false;
};

int cmd_gen(const GenArgs& a, const json& config) {
  if (a.phantom.empty() == a.mrc.empty()) throw UsageError("exactly one of --phantom and --mrc is required");
  if (a.n < 1) throw UsageError("--n must be at least 1");
  if (a.size < 8) throw UsageError("--size must be at least 8");
  if (!(a.snr >= 0.0)) throw UsageError("--snr must be nonnegative (0 = noiseless)");
  prepare_out(a.out);
  set_threads(a.threads);

  Volume volume;
  json info;
  if (!a.phantom.empty()) {
    volume = load_phantom(read_phantom_spec(a.phantom, a.volume_side));
    info = {{"source", "phantom"}, {"path", a.phantom}, {"side", volume.side()}};
  } else {
    volume = load_mrc(a.mrc);
    info = {{"source", "mrc"}, {"path", a.mrc}, {"side", volume.side()}};
  }
  ProjectionSet set = generate_dataset(volume, a.n, a.size, a.snr, a.seed, !a.no_clean);
  set.volume_info = info;
  save_dataset(set, a.out);
  write_json(fs::path(a.out) / "config.json", config);
  std::cout << "dataset " << a.out << ": n=" << set.count() << " N=" << set.size << " snr=" << num(set.snr)
            << " sigma=" << num(set.sigma) << '\n';
  return 0;
}

struct ClusterArgs {
  std::string dataset, metric = "wemd", out;
  int k = 0, rotations = 200, threads = available_cores(), max_iters = 100;
  std::uint64_t seed = 0;
  double rel_tol = 1e-4;
  WaveletArgs wavelet;
};

int cmd_cluster(const ClusterArgs& a, const json& config) {
  if (a.dataset.empty()) throw UsageError("--dataset is required");
  Metric metric;
  try {
    metric = parse_metric(a.metric);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (a.k < 1) throw UsageError("--k must be at least 1");
  if (a.rotations < 1) throw UsageError("--rotations must be at least 1");
  if (a.max_iters < 1) throw UsageError("--max-iters must be at least 1");
  if (!(a.rel_tol >= 0.0)) throw UsageError("--rel-tol must be nonnegative");
  if (a.out.empty()) throw UsageError("--out is required");
  set_threads(a.threads);

  const ProjectionSet set = load_dataset(a.dataset);
  ClusterParams params;
  params.k = a.k;
  params.metric = metric;
  params.rotations = a.rotations;
  params.seed = a.seed;
  params.max_iters = a.max_iters;
  params.rel_tol = a.rel_tol;
  params.wavelet = a.wavelet.config();
  const ClusterModel model = fit(set.images, params, set.pixel_size());

  prepare_out(a.out);
  save_run(model, a.out, {{"dataset", a.dataset}});
  write_json(fs::path(a.out) / "config.json", config);

  std::cout << "run " << a.out << ": metric=" << a.metric << " k=" << a.k << " iterations=" << model.iterations
            << " stop=" << model.stop_reason << '\n';
  std::cout << "loss " << num(model.loss_trace.front()) << " -> " << num(model.loss_trace.back()) << '\n';
  std::cout << "init " << num(model.init_seconds) << " s\n";
  for (std::size_t t = 0; t < model.timing.size(); ++t) {
    std::cout << "iter " << t + 1 << ": loss " << num(model.loss_trace[t]) << " assign "
              << num(model.timing[t].assign_seconds) << " s update " << num(model.timing[t].update_seconds) << " s\n";
  }
  for (const auto& w : model.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

struct EvalArgs {
  std::string dataset, run, out;
  std::size_t top = 8;
  int threads = available_cores();
};

int cmd_eval(const EvalArgs& a, const json& config, bool top_given) {
  if (a.dataset.empty() || a.run.empty()) throw UsageError("--dataset and --run are required");
  if (a.out.empty()) throw UsageError("--out is required");
  set_threads(a.threads);
  const ProjectionSet set = load_dataset(a.dataset);
  const ClusterModel model = load_run(a.run);
  if (set.count() != model.assignments.size()) {
    throw Error(Errc::data, "dataset " + a.dataset + " has " + std::to_string(set.count()) + " images but run " +
                                a.run + " assigns " + std::to_string(model.assignments.size()));
  }
  std::size_t top = a.top;
  if (top > model.centroids.size()) {
    if (top_given) throw UsageError("--top exceeds k = " + std::to_string(model.centroids.size()));
    top = model.centroids.size();
  }
  const EvalReport report = evaluate(set, model);
  prepare_out(a.out);
  write_report(report, model, top, a.out);
  write_json(fs::path(a.out) / "config.json", config);
  std::cout << "report " << a.out << ": pairs=" << report.histogram.pairs << " median_angle_deg="
            << (report.histogram.median_deg ? num(*report.histogram.median_deg) : std::string("null"))
            << " occupancy_cv=" << num(report.occupancy.cv) << '\n';
  return 0;
}

struct ScatterArgs {
  std::string dataset, out;
  std::size_t ref_index = 0;
  int rotations = 200, threads = available_cores();
  WaveletArgs wavelet;
};

int cmd_scatter(const ScatterArgs& a, const json& config) {
  if (a.dataset.empty()) throw UsageError("--dataset is required");
  if (a.out.empty()) throw UsageError("--out is required");
  if (a.rotations < 1) throw UsageError("--rotations must be at least 1");
  set_threads(a.threads);
  const ProjectionSet set = load_dataset(a.dataset);
  if (a.ref_index >= set.count()) {
    throw UsageError("--ref-index " + std::to_string(a.ref_index) + " is out of range for n = " +
                     std::to_string(set.count()));
  }
  const auto rows = noise_scatter(set, a.ref_index, a.rotations, a.wavelet.config());
  std::vector<double> angle, l2, w1;
  for (const auto& r : rows) {
    if (r.angle_deg > 90.0) continue;
    angle.push_back(r.angle_deg);
    l2.push_back(r.d_l2);
    w1.push_back(r.d_w1);
  }
  const double s_l2 = spearman(angle, l2), s_w1 = spearman(angle, w1);
  prepare_out(a.out);
  write_scatter_csv(fs::path(a.out) / "scatter.csv", rows);
  auto nullable = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  write_json(fs::path(a.out) / "scatter_summary.json", {{"reference_index", a.ref_index},
                                                        {"pairs_within_90_deg", angle.size()},
                                                        {"spearman_l2", nullable(s_l2)},
                                                        {"spearman_wemd", nullable(s_w1)}});
  write_json(fs::path(a.out) / "config.json", config);
  std::cout << "scatter " << a.out << ": rows=" << rows.size() << " spearman(<=90 deg) l2=" << num(s_l2)
            << " wemd=" << num(s_w1) << '\n';
  return 0;
}

struct OracleArgs {
  std::string out;
  std::size_t size = 16, pairs = 100;
  std::uint64_t seed = 0;
  int threads = available_cores();
  bool inject_identical = false;
  WaveletArgs wavelet;
};

int cmd_oracle(const OracleArgs& a, const json& config) {
  if (a.size > kExactSizeCap) {
    throw UsageError("--size " + std::to_string(a.size) + " exceeds the exact solver cap of " +
                     std::to_string(kExactSizeCap));
  }
  if (a.size < 8) throw UsageError("--size must be at least 8");
  if (a.pairs < 1) throw UsageError("--pairs must be at least 1");
  if (a.out.empty()) throw UsageError("--out is required");
  set_threads(a.threads);
  const OracleReport report = oracle_envelope(a.size, a.pairs, a.seed, a.inject_identical, a.wavelet.config());
  prepare_out(a.out);
  write_json(fs::path(a.out) / "oracle.json", to_json(report));
  write_json(fs::path(a.out) / "config.json", config);
  std::cout << "oracle " << a.out << ": pairs=" << report.rows.size() << " skipped=" << report.skipped.size()
            << " c=" << num(report.c) << " C=" << num(report.C)
            << " C/c=" << num(report.c > 0.0 ? report.C / report.c : 0.0) << '\n';
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Rotationally-invariant k-means for tomographic projections"};
  app.require_subcommand(1);

  GenArgs gen;
  Command gen_cmd{"gen", app.add_subcommand("gen", "Generate a synthetic projection dataset")};
  gen_cmd.option("--phantom", "phantom", gen.phantom, "Phantom spec JSON");
  gen_cmd.option("--mrc", "mrc", gen.mrc, "MRC volume (mode 2, cubic)");
  gen_cmd.option("--volume-side", "volume_side", gen.volume_side, "Voxels per axis for phantom volumes");
  gen_cmd.option("--n", "n", gen.n, "Number of images");
  gen_cmd.option("--size", "size", gen.size, "Image side in pixels");
  gen_cmd.option("--snr", "snr", gen.snr, "Stack SNR (0 = noiseless)");
  gen_cmd.option("--seed", "seed", gen.seed, "RNG seed");
  gen_cmd.option("--out", "out", gen.out, "Output directory");
  gen_cmd.option("--threads", "threads", gen.threads, "Worker threads");
  gen_cmd.flag("--no-clean", "no_clean", gen.no_clean, "Do not store the clean stack");
  gen_cmd.add_config_option();

  ClusterArgs cl;
  Command cl_cmd{"cluster", app.add_subcommand("cluster", "Run rotationally-invariant k-means")};
  cl_cmd.option("--dataset", "dataset", cl.dataset, "Dataset directory");
  cl_cmd.option("--metric", "metric", cl.metric, "l2 or wemd");
  cl_cmd.option("--k", "k", cl.k, "Cluster count");
  cl_cmd.option("--rotations", "rotations", cl.rotations, "In-plane rotation count m");
  cl_cmd.option("--seed", "seed", cl.seed, "RNG seed");
  cl_cmd.option("--threads", "threads", cl.threads, "Worker threads");
  cl_cmd.option("--max-iters", "max_iters", cl.max_iters, "Iteration cap");
  cl_cmd.option("--rel-tol", "rel_tol", cl.rel_tol, "Stop when the relative loss decrease falls below this");
  cl_cmd.option("--out", "out", cl.out, "Run directory");
  cl.wavelet.add_to(cl_cmd);
  cl_cmd.add_config_option();

  EvalArgs ev;
  Command ev_cmd{"eval", app.add_subcommand("eval", "Evaluate a run against ground truth")};
  ev_cmd.option("--dataset", "dataset", ev.dataset, "Dataset directory");
  ev_cmd.option("--run", "run", ev.run, "Run directory");
  ev_cmd.option("--out", "out", ev.out, "Report directory");
  ev_cmd.option("--top", "top", ev.top, "Number of largest-cluster centroids to emit");
  ev_cmd.option("--threads", "threads", ev.threads, "Worker threads");
  ev_cmd.add_config_option();

  ScatterArgs sc;
  Command sc_cmd{"scatter", app.add_subcommand("scatter", "Distance versus viewing angle for one clean reference")};
  sc_cmd.option("--dataset", "dataset", sc.dataset, "Dataset directory");
  sc_cmd.option("--ref-index", "ref_index", sc.ref_index, "Reference image index");
  sc_cmd.option("--rotations", "rotations", sc.rotations, "In-plane rotation count m");
  sc_cmd.option("--out", "out", sc.out, "Output directory");
  sc_cmd.option("--threads", "threads", sc.threads, "Worker threads");
  sc.wavelet.add_to(sc_cmd);
  sc_cmd.add_config_option();

  OracleArgs orc;
  Command or_cmd{"oracle", app.add_subcommand("oracle", "Exact versus wavelet W1 on random pairs")};
  or_cmd.option("--size", "size", orc.size, "Image side (at most 32)");
  or_cmd.option("--pairs", "pairs", orc.pairs, "Number of pairs");
  or_cmd.option("--seed", "seed", orc.seed, "RNG seed");
  or_cmd.option("--out", "out", orc.out, "Output directory");
  or_cmd.option("--threads", "threads", orc.threads, "Worker threads");
  or_cmd.flag("--inject-identical", "inject_identical", orc.inject_identical, "Make pair 0 an image with itself");
  orc.wavelet.add_to(or_cmd);
  or_cmd.add_config_option();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }

  Command* active = nullptr;
  for (Command* c : {&gen_cmd, &cl_cmd, &ev_cmd, &sc_cmd, &or_cmd}) {
    if (c->app->parsed()) active = c;
  }

  try {
    active->apply_config();
    const json config = active->resolved();
    if (active == &gen_cmd) return cmd_gen(gen, config);
    if (active == &cl_cmd) return cmd_cluster(cl, config);
    if (active == &ev_cmd) return cmd_eval(ev, config, ev_cmd.app->get_option("--top")->count() > 0 || !ev_cmd.config_path.empty());
    if (active == &sc_cmd) return cmd_scatter(sc, config);
    return cmd_oracle(orc, config);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace wkm::cli
