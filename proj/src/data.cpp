#include "donn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "donn/png_io.hpp"
#include "json.hpp"

namespace donn {
namespace fs = std::filesystem;

void Sample::validate() const {
  const std::size_t n = gt.side();
  for (const RealImage* ch : {&r, &g, &b}) {
    if (ch->side() != n) throw DimensionError("Sample: channel side differs from mask side");
    for (double v : *ch) {
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("Sample: channel value outside [0,1]");
    }
  }
  require_binary(gt, "Sample");
}

// ---------------------------------------------------------------------------
// Manifest

DatasetManifest load_manifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / kManifestFileName : path;
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open manifest " + file.string());

  DatasetManifest m;
  m.root = file.parent_path();
  try {
    const auto j = nlohmann::json::parse(in);
    m.side_px = j.at("side_px").get<std::size_t>();
    m.split = j.value("split", "train");
    for (const auto& p : j.at("pairs")) {
      m.pairs.push_back({p.at("input").get<std::string>(), p.at("label").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest " + file.string() + ": " + e.what());
  }
  if (m.pairs.empty()) throw ValidationError("manifest " + file.string() + " lists no samples");
  if (m.side_px < 2) throw ValidationError("manifest " + file.string() + ": side_px must be >= 2");
  for (std::size_t i = 0; i < m.pairs.size(); ++i) {
    for (const fs::path& p : {m.input_path(i), m.label_path(i)}) {
      if (!fs::is_regular_file(p)) throw ValidationError("manifest entry missing: " + p.string());
      try {
        probe_png(p);
      } catch (const IoError& e) {
        throw ValidationError(std::string("manifest entry unreadable: ") + e.what());
      }
    }
  }
  return m;
}

void save_manifest(const DatasetManifest& m, const fs::path& file) {
  nlohmann::json j;
  j["format"] = "donn-manifest";
  j["version"] = 1;
  j["side_px"] = m.side_px;
  j["split"] = m.split;
  auto pairs = nlohmann::json::array();
  for (const auto& p : m.pairs) pairs.push_back({{"input", p.input}, {"label", p.label}});
  j["pairs"] = pairs;
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + file.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest " + file.string());
}

// ---------------------------------------------------------------------------
// Loading and resampling

namespace {

struct Crop {
  std::size_t row0, col0, side;
};

Crop centre_crop(const RasterImage& img) {
  const std::size_t s = std::min(img.width, img.height);
  return {(img.height - s) / 2, (img.width - s) / 2, s};
}

}  // namespace

RealImage resize_bilinear(const RealImage& src, std::size_t target) {
  const std::size_t s = src.side();
  if (s == target) return src;
  RealImage out(target);
  const double scale = static_cast<double>(s) / static_cast<double>(target);
  auto coord = [&](std::size_t d, std::size_t& i0, std::size_t& i1, double& t) {
    double x = (static_cast<double>(d) + 0.5) * scale - 0.5;
    x = std::clamp(x, 0.0, static_cast<double>(s - 1));
    i0 = static_cast<std::size_t>(std::floor(x));
    i1 = std::min(i0 + 1, s - 1);
    t = x - static_cast<double>(i0);
  };
  for (std::size_t r = 0; r < target; ++r) {
    std::size_t r0, r1;
    double tr;
    coord(r, r0, r1, tr);
    for (std::size_t c = 0; c < target; ++c) {
      std::size_t c0, c1;
      double tc;
      coord(c, c0, c1, tc);
      const double top = src(r0, c0) * (1.0 - tc) + src(r0, c1) * tc;
      const double bottom = src(r1, c0) * (1.0 - tc) + src(r1, c1) * tc;
      out(r, c) = std::clamp(top * (1.0 - tr) + bottom * tr, 0.0, 1.0);
    }
  }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& src, std::size_t target) {
  const std::size_t s = src.side();
  if (s == target) return src;
  BinaryMask out(target);
  const double scale = static_cast<double>(s) / static_cast<double>(target);
  for (std::size_t r = 0; r < target; ++r) {
    const auto sr = std::min(static_cast<std::size_t>((static_cast<double>(r) + 0.5) * scale), s - 1);
    for (std::size_t c = 0; c < target; ++c) {
      const auto sc = std::min(static_cast<std::size_t>((static_cast<double>(c) + 0.5) * scale), s - 1);
      out(r, c) = src(sr, sc);
    }
  }
  return out;
}

std::array<RealImage, 3> load_rgb_planes(const fs::path& input, std::size_t target_side) {
  const RasterImage img = read_png(input);
  const Crop crop = centre_crop(img);
  const double maxv = img.max_value();
  const bool colour = img.channels >= 3;
  std::array<RealImage, 3> planes{RealImage(crop.side), RealImage(crop.side), RealImage(crop.side)};
  for (std::size_t r = 0; r < crop.side; ++r) {
    for (std::size_t c = 0; c < crop.side; ++c) {
      for (int k = 0; k < 3; ++k) {
        const int src_channel = colour ? k : 0;
        planes[static_cast<std::size_t>(k)](r, c) = img.at(r + crop.row0, c + crop.col0, src_channel) / maxv;
      }
    }
  }
  for (auto& p : planes) p = resize_bilinear(p, target_side);
  return planes;
}

Sample load_sample(const fs::path& input, const fs::path& label, std::size_t target_side) {
  Sample s;
  auto planes = load_rgb_planes(input, target_side);
  s.r = std::move(planes[0]);
  s.g = std::move(planes[1]);
  s.b = std::move(planes[2]);

  const RasterImage lab = read_png(label);
  const Crop crop = centre_crop(lab);
  const double maxv = lab.max_value();
  BinaryMask mask(crop.side);
  for (std::size_t r = 0; r < crop.side; ++r) {
    for (std::size_t c = 0; c < crop.side; ++c) {
      const std::size_t rr = r + crop.row0, cc = c + crop.col0;
      double v;
      if (lab.channels >= 3) {
        v = 0.299 * lab.at(rr, cc, 0) + 0.587 * lab.at(rr, cc, 1) + 0.114 * lab.at(rr, cc, 2);
      } else {
        v = lab.at(rr, cc, 0);
      }
      mask(r, c) = v / maxv >= 0.5 ? 1 : 0;
    }
  }
  s.gt = resize_nearest(mask, target_side);
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic data

SynthKind synth_kind_from_string(const std::string& name) {
  if (name == "bars") return SynthKind::bars;
  if (name == "lanes") return SynthKind::lanes;
  throw UsageError("unknown synthetic kind '" + name + "' (expected bars|lanes)");
}

const char* to_string(SynthKind kind) { return kind == SynthKind::bars ? "bars" : "lanes"; }

namespace {

struct Painter {
  Sample s;
  explicit Painter(std::size_t side) {
    s.r = RealImage(side);
    s.g = RealImage(side);
    s.b = RealImage(side);
    s.gt = BinaryMask(side);
  }
  void set(std::size_t r, std::size_t c, double red, double green, double blue) {
    s.r(r, c) = std::clamp(red, 0.0, 1.0);
    s.g(r, c) = std::clamp(green, 0.0, 1.0);
    s.b(r, c) = std::clamp(blue, 0.0, 1.0);
  }
};

Sample make_bars(std::size_t side, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Painter p(side);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const double base = 0.05 + 0.1 * u(rng);
      p.set(r, c, base + 0.05 * u(rng), base + 0.05 * u(rng), base + 0.05 * u(rng));
    }
  }
  const int count = 1 + static_cast<int>(u(rng) * 3.0);
  for (int k = 0; k < count; ++k) {
    // Random bright hue: one channel saturated, the others random.
    std::array<double, 3> hue{u(rng), u(rng), u(rng)};
    hue[static_cast<std::size_t>(u(rng) * 3.0) % 3] = 1.0;
    const double sd = static_cast<double>(side);
    const auto h = static_cast<std::size_t>(sd / 8.0 + u(rng) * sd * 3.0 / 8.0);
    const auto w = static_cast<std::size_t>(sd / 8.0 + u(rng) * sd * 3.0 / 8.0);
    const auto r0 = static_cast<std::size_t>(u(rng) * static_cast<double>(side - h));
    const auto c0 = static_cast<std::size_t>(u(rng) * static_cast<double>(side - w));
    for (std::size_t r = r0; r < r0 + h; ++r) {
      for (std::size_t c = c0; c < c0 + w; ++c) {
        p.set(r, c, hue[0], hue[1], hue[2]);
        p.s.gt(r, c) = 1;
      }
    }
  }
  return std::move(p.s);
}

Sample make_lanes(std::size_t side, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double sd = static_cast<double>(side);
  const double horizon = sd * (0.35 + 0.15 * u(rng));
  const double vanish_x = sd * (0.4 + 0.2 * u(rng));
  const double road = 0.25 + 0.15 * u(rng);
  const double sky = 0.6 + 0.4 * u(rng);

  Painter p(side);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      if (static_cast<double>(r) < horizon) {
        p.set(r, c, 0.18 * sky, 0.24 * sky, 0.38 * sky);
      } else {
        const double texture = road + 0.08 * (u(rng) - 0.5);
        p.set(r, c, texture, texture, texture * 0.97);
      }
    }
  }

  const bool yellow = u(rng) < 0.3;
  const std::array<double, 3> paint = yellow ? std::array<double, 3>{1.0, 0.85, 0.25}
                                             : std::array<double, 3>{0.95, 0.95, 0.95};
  const double bottom_width = sd * (0.04 + 0.03 * u(rng));
  const std::array<double, 2> bottom_x{sd * (0.1 + 0.2 * u(rng)), sd * (0.7 + 0.2 * u(rng))};
  // Stripes stop short of the vanishing point.
  const double stop = horizon + (sd - horizon) * (0.1 + 0.1 * u(rng));

  for (double x_bottom : bottom_x) {
    for (std::size_t r = 0; r < side; ++r) {
      const double y = static_cast<double>(r) + 0.5;
      if (y < stop) continue;
      const double t = (y - horizon) / (sd - horizon);  // 0 at horizon, 1 at bottom
      const double centre = vanish_x + (x_bottom - vanish_x) * t;
      const double half = std::max(0.5, 0.5 * bottom_width * t);
      for (std::size_t c = 0; c < side; ++c) {
        if (std::abs(static_cast<double>(c) + 0.5 - centre) <= half) {
          const double shade = 0.95 + 0.05 * u(rng);
          p.set(r, c, paint[0] * shade, paint[1] * shade, paint[2] * shade);
          p.s.gt(r, c) = 1;
        }
      }
    }
  }
  return std::move(p.s);
}

std::vector<std::uint8_t> quantize_rgb(const Sample& s) {
  std::vector<std::uint8_t> px(s.gt.size() * 3);
  for (std::size_t i = 0; i < s.gt.size(); ++i) {
    px[3 * i] = static_cast<std::uint8_t>(std::lround(s.r[i] * 255.0));
    px[3 * i + 1] = static_cast<std::uint8_t>(std::lround(s.g[i] * 255.0));
    px[3 * i + 2] = static_cast<std::uint8_t>(std::lround(s.b[i] * 255.0));
  }
  return px;
}

}  // namespace

Sample synth_sample(SynthKind kind, std::size_t side, std::uint64_t seed, std::size_t index) {
  if (side < 32) throw UsageError("synthetic samples need side >= 32");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(kind)};
  std::mt19937_64 rng(seq);
  return kind == SynthKind::bars ? make_bars(side, rng) : make_lanes(side, rng);
}

GeneratedDataset gen_synthetic(SynthKind kind, std::size_t count, std::size_t side, std::uint64_t seed,
                               const fs::path& out_dir, const std::string& split, bool force) {
  if (count < 1) throw UsageError("synthetic dataset needs count >= 1");
  if (side < 32) throw UsageError("synthetic samples need side >= 32");
  const fs::path manifest_file = out_dir / kManifestFileName;
  if (fs::exists(manifest_file) && !force) {
    throw IoError(manifest_file.string() + " exists; pass force to overwrite");
  }
  std::error_code ec;
  fs::create_directories(out_dir / "inputs", ec);
  fs::create_directories(out_dir / "labels", ec);
  if (ec || !fs::is_directory(out_dir / "inputs") || !fs::is_directory(out_dir / "labels")) {
    throw IoError("cannot create dataset directories under " + out_dir.string());
  }

  GeneratedDataset out;
  out.manifest.root = out_dir;
  out.manifest.side_px = side;
  out.manifest.split = split;
  out.samples.reserve(count);
  char name[32];
  for (std::size_t i = 0; i < count; ++i) {
    Sample s = synth_sample(kind, side, seed, i);
    std::snprintf(name, sizeof(name), "%06zu.png", i);
    const std::string input = std::string("inputs/") + name;
    const std::string label = std::string("labels/") + name;
    write_png(out_dir / input, side, side, 3, quantize_rgb(s));
    std::vector<std::uint8_t> lab(s.gt.size());
    for (std::size_t k = 0; k < lab.size(); ++k) lab[k] = s.gt[k] ? 255 : 0;
    write_png(out_dir / label, side, side, 1, lab);
    out.manifest.pairs.push_back({input, label});
    out.samples.push_back(std::move(s));
  }
  save_manifest(out.manifest, manifest_file);
  out.manifest_path = manifest_file;
  return out;
}

// ---------------------------------------------------------------------------
// Sources and iteration

InMemoryDataset::InMemoryDataset(std::vector<Sample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw UsageError("dataset is empty");
  side_ = samples_.front().side();
  for (const auto& s : samples_) {
    if (s.side() != side_) throw DimensionError("dataset samples have different sides");
  }
}

ManifestDataset::ManifestDataset(DatasetManifest manifest, std::size_t cache_bytes)
    : manifest_(std::move(manifest)) {
  if (manifest_.pairs.empty()) throw ValidationError("dataset is empty");
  const std::size_t per_sample = manifest_.side_px * manifest_.side_px * (3 * sizeof(double) + 1);
  if (per_sample * manifest_.pairs.size() <= cache_bytes) {
    cache_.reserve(manifest_.pairs.size());
    for (std::size_t i = 0; i < manifest_.pairs.size(); ++i) {
      cache_.push_back(load_sample(manifest_.input_path(i), manifest_.label_path(i), manifest_.side_px));
    }
  }
}

Sample ManifestDataset::get(std::size_t i) const {
  if (!cache_.empty()) return cache_.at(i);
  return load_sample(manifest_.input_path(i), manifest_.label_path(i), manifest_.side_px);
}

std::vector<std::size_t> visit_order(std::size_t count, std::optional<std::uint64_t> shuffle_seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

SampleStream::SampleStream(const SampleSource& source, std::optional<std::uint64_t> shuffle_seed)
    : source_(&source), order_(visit_order(source.size(), shuffle_seed)) {}

std::optional<Sample> SampleStream::next() {
  if (pos_ >= order_.size()) return std::nullopt;
  return source_->get(order_[pos_++]);
}

}  // namespace donn
