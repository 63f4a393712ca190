#include "wkm/dataset.hpp"

#include "wkm/error.hpp"
#include "wkm/projection.hpp"

#include <fstream>
#include <string>

namespace wkm {

namespace fs = std::filesystem;

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t index, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream};
  return std::mt19937_64(seq);
}

void round_to_float(Image& image) {
  for (double& v : image.pixels()) v = static_cast<double>(static_cast<float>(v));
}

ProjectionSet generate_dataset(const Volume& volume, std::size_t n, std::size_t size, double snr,
                               std::uint64_t seed, bool keep_clean) {
  if (n < 1) throw Error(Errc::invalid_argument, "dataset needs at least one image");
  if (!(snr >= 0.0)) throw Error(Errc::invalid_argument, "snr must be nonnegative");

  ProjectionSet set;
  set.size = size;
  set.snr = snr;
  set.seed = seed;
  set.orientations.resize(n);
  set.clean.resize(n);

  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    auto rng = derived_rng(seed, static_cast<std::uint64_t>(i), 0);
    set.orientations[i] = sample_orientation(rng);
    set.clean[i] = project(volume, set.orientations[i], size);
    round_to_float(set.clean[i]);
  }

  set.sigma = snr > 0.0 ? compute_sigma(set.clean, snr) : 0.0;
  set.images = set.clean;
  if (set.sigma > 0.0) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      auto rng = derived_rng(seed, static_cast<std::uint64_t>(i), 1);
      std::normal_distribution<double> noise(0.0, set.sigma);
      for (double& v : set.images[i].pixels()) v += noise(rng);
      round_to_float(set.images[i]);
    }
  }
  if (!keep_clean) set.clean.clear();
  return set;
}

void write_f32_stack(const fs::path& path, std::span<const Image> images) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot create " + path.string());
  std::vector<float> buf;
  for (const auto& img : images) {
    buf.assign(img.pixels().begin(), img.pixels().end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

std::vector<Image> read_f32_stack(const fs::path& path, std::size_t count, std::size_t size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::vector<Image> images;
  images.reserve(count);
  std::vector<float> buf(size * size);
  for (std::size_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
      throw Error(Errc::io, path.string() + ": truncated at image " + std::to_string(i) + " of " + std::to_string(count));
    }
    images.emplace_back(size, std::vector<double>(buf.begin(), buf.end()));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(Errc::io, path.string() + ": trailing bytes after " + std::to_string(count) + " images");
  }
  return images;
}

void save_dataset(const ProjectionSet& set, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json meta;
  meta["n"] = set.count();
  meta["size"] = set.size;
  meta["snr"] = set.snr;
  meta["sigma"] = set.sigma;
  meta["seed"] = set.seed;
  meta["pixel_size"] = set.pixel_size();
  meta["volume"] = set.volume_info;
  meta["has_clean"] = set.has_clean();
  auto& orients = meta["orientations"] = nlohmann::json::array();
  for (const auto& o : set.orientations) {
    const auto& q = o.quaternion();
    orients.push_back({{"quaternion", {q.w, q.x, q.y, q.z}}, {"viewing_direction", o.viewing_direction()}});
  }
  const fs::path meta_path = dir / "meta.json";
  std::ofstream out(meta_path);
  if (!out) throw Error(Errc::io, "cannot create " + meta_path.string());
  out << meta.dump(1) << '\n';
  if (!out) throw Error(Errc::io, "failed writing " + meta_path.string());

  write_f32_stack(dir / "images.f32", set.images);
  if (set.has_clean()) {
    write_f32_stack(dir / "clean.f32", set.clean);
  } else {
    fs::remove(dir / "clean.f32", ec);
  }
}

ProjectionSet load_dataset(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  std::ifstream in(meta_path);
  if (!in) throw Error(Errc::io, "cannot open " + meta_path.string());
  ProjectionSet set;
  std::size_t n = 0;
  try {
    nlohmann::json meta;
    in >> meta;
    n = meta.at("n").get<std::size_t>();
    set.size = meta.at("size").get<std::size_t>();
    set.snr = meta.at("snr").get<double>();
    set.sigma = meta.at("sigma").get<double>();
    set.seed = meta.at("seed").get<std::uint64_t>();
    set.volume_info = meta.value("volume", nlohmann::json::object());
    const auto& orients = meta.at("orientations");
    if (orients.size() != n) throw Error(Errc::data, meta_path.string() + ": orientation count does not match n");
    for (const auto& o : orients) {
      const auto q = o.at("quaternion").get<std::array<double, 4>>();
      set.orientations.push_back(Orientation::from_quaternion({q[0], q[1], q[2], q[3]}));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::data, meta_path.string() + ": " + e.what());
  }
  set.images = read_f32_stack(dir / "images.f32", n, set.size);
  if (fs::exists(dir / "clean.f32")) set.clean = read_f32_stack(dir / "clean.f32", n, set.size);
  return set;
}

}  // namespace wkm
