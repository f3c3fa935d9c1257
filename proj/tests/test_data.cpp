#include <fstream>
#include <sstream>

#include "doctest.h"
#include "donn/data.hpp"
#include "donn/png_io.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace donn;
using namespace donn::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_gray(const fs::path& p, std::size_t w, std::size_t h, std::uint8_t value) {
  std::vector<std::uint8_t> px(w * h, value);
  write_png(p, w, h, 1, px);
}

}  // namespace

TEST_CASE("load_sample channel split and label threshold") {
  const auto dir = scratch_dir("load_sample");
  std::vector<std::uint8_t> rgb(4 * 4 * 3, 0);
  rgb[0] = 255;                  // (0,0) pure red
  rgb[(1 * 4 + 2) * 3 + 2] = 255;  // (1,2) pure blue
  rgb[(3 * 4 + 3) * 3 + 1] = 128;
  write_png(dir / "in.png", 4, 4, 3, rgb);
  std::vector<std::uint8_t> label(16, 0);
  label[5] = 255;
  label[6] = 127;
  label[7] = 128;
  write_png(dir / "gt.png", 4, 4, 1, label);

  const auto s = load_sample(dir / "in.png", dir / "gt.png", 4);
  CHECK(s.r(0, 0) == 1.0);
  CHECK(s.g(0, 0) == 0.0);
  CHECK(s.b(0, 0) == 0.0);
  CHECK(s.b(1, 2) == 1.0);
  CHECK(s.g(3, 3) == doctest::Approx(128.0 / 255.0));
  CHECK(s.gt[5] == 1);
  CHECK(s.gt[6] == 0);
  CHECK(s.gt[7] == 1);
  CHECK(s.gt[0] == 0);

  CHECK_THROWS_AS(load_sample(dir / "nope.png", dir / "gt.png", 4), IoError);
}

TEST_CASE("identity resampling path") {
  const auto img = random_image(9, 3);
  const auto same = resize_bilinear(img, 9);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(same[i] == doctest::Approx(img[i]).epsilon(1e-15));
  const auto mask = random_mask(9, 4);
  CHECK(resize_nearest(mask, 9) == mask);
}

TEST_CASE("resampling keeps ranges and binarity") {
  const auto img = random_image(17, 5);
  for (std::size_t side : {4u, 8u, 31u}) {
    for (double v : resize_bilinear(img, side)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(is_binary(resize_nearest(random_mask(17, 6), side)));
  }
  // Constant images stay constant.
  for (double v : resize_bilinear(RealImage(7, 0.3), 12)) CHECK(v == doctest::Approx(0.3));
}

TEST_CASE("non-square inputs are centre cropped") {
  const auto dir = scratch_dir("crop");
  // 6 x 4 image: columns 0 and 5 red, the central 4 x 4 green.
  std::vector<std::uint8_t> rgb(6 * 4 * 3, 0);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 6; ++c) rgb[(r * 6 + c) * 3 + ((c == 0 || c == 5) ? 0 : 1)] = 255;
  }
  write_png(dir / "in.png", 6, 4, 3, rgb);
  write_gray(dir / "gt.png", 6, 4, 255);
  const auto s = load_sample(dir / "in.png", dir / "gt.png", 4);
  for (double v : s.r) CHECK(v == 0.0);
  for (double v : s.g) CHECK(v == 1.0);
}

TEST_CASE("synthetic samples") {
  for (auto kind : {SynthKind::bars, SynthKind::lanes}) {
    const auto a = synth_sample(kind, 48, 3, 7);
    const auto b = synth_sample(kind, 48, 3, 7);
    CHECK_NOTHROW(a.validate());
    CHECK(a.r == b.r);
    CHECK(a.gt == b.gt);
    CHECK_FALSE(synth_sample(kind, 48, 3, 8).gt == a.gt);
  }
  CHECK_THROWS_AS(synth_sample(SynthKind::lanes, 31, 0, 0), UsageError);
  CHECK_THROWS_AS(synth_kind_from_string("circles"), UsageError);
}

TEST_CASE("lanes positive fraction at side 64") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = synth_sample(SynthKind::lanes, 64, seed, 0);
    double pos = 0;
    for (auto v : s.gt) pos += v;
    const double frac = pos / static_cast<double>(s.gt.size());
    CAPTURE(seed);
    CHECK(frac > 0.01);
    CHECK(frac < 0.25);
  }
}

TEST_CASE("gen_synthetic") {
  const auto dir = scratch_dir("gen");
  const auto ds = gen_synthetic(SynthKind::lanes, 5, 32, 11, dir / "a");
  CHECK(ds.manifest.pairs.size() == 5);
  CHECK(fs::exists(dir / "a" / "manifest.json"));

  SUBCASE("round trip within 8-bit quantisation") {
    const auto m = load_manifest(dir / "a");
    CHECK(m.side_px == 32);
    for (std::size_t i = 0; i < m.pairs.size(); ++i) {
      const auto s = load_sample(m.input_path(i), m.label_path(i), 32);
      const auto& ref = ds.samples[i];
      CHECK(s.gt == ref.gt);
      double worst = 0.0;
      for (std::size_t p = 0; p < s.r.size(); ++p) {
        worst = std::max({worst, std::abs(s.r[p] - ref.r[p]), std::abs(s.g[p] - ref.g[p]),
                          std::abs(s.b[p] - ref.b[p])});
      }
      CHECK(worst <= 1.0 / 255.0);
    }
  }
  SUBCASE("deterministic bytes") {
    gen_synthetic(SynthKind::lanes, 5, 32, 11, dir / "b");
    for (const auto& e : ds.manifest.pairs) {
      CHECK(slurp(dir / "a" / e.input) == slurp(dir / "b" / e.input));
      CHECK(slurp(dir / "a" / e.label) == slurp(dir / "b" / e.label));
    }
    CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
  }
  SUBCASE("overwrite protection") {
    CHECK_THROWS_AS(gen_synthetic(SynthKind::lanes, 5, 32, 11, dir / "a"), IoError);
    CHECK_NOTHROW(gen_synthetic(SynthKind::lanes, 5, 32, 12, dir / "a", "train", true));
  }
  SUBCASE("degenerate requests") {
    CHECK_THROWS_AS(gen_synthetic(SynthKind::bars, 0, 32, 1, dir / "c"), UsageError);
    CHECK_THROWS_AS(gen_synthetic(SynthKind::bars, 2, 16, 1, dir / "c"), UsageError);
  }
}

TEST_CASE("manifest validation") {
  const auto dir = scratch_dir("manifest");
  gen_synthetic(SynthKind::bars, 3, 32, 1, dir);
  CHECK(load_manifest(dir / "manifest.json").pairs.size() == 3);

  SUBCASE("missing file is named") {
    fs::remove(dir / "labels" / "000001.png");
    try {
      load_manifest(dir);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("000001.png") != std::string::npos);
    }
  }
  SUBCASE("empty manifest") {
    std::ofstream(dir / "manifest.json") << R"({"side_px": 32, "split": "train", "pairs": []})";
    CHECK_THROWS_AS(load_manifest(dir), ValidationError);
  }
  SUBCASE("malformed manifest") {
    std::ofstream(dir / "manifest.json") << "{ not json";
    CHECK_THROWS_AS(load_manifest(dir), ValidationError);
  }
  SUBCASE("missing manifest") { CHECK_THROWS_AS(load_manifest(dir / "elsewhere"), ValidationError); }
}

TEST_CASE("CityScapes-sized manifests validate") {
  const auto dir = scratch_dir("cityscapes");
  for (const auto& [split, count] : {std::pair<std::string, std::size_t>{"train", 2975}, {"eval", 500}}) {
    const auto root = dir / split;
    fs::create_directories(root / "inputs");
    fs::create_directories(root / "labels");
    DatasetManifest m;
    m.root = root;
    m.side_px = 480;
    m.split = split;
    std::vector<std::uint8_t> rgb(2 * 2 * 3, 90);
    for (std::size_t i = 0; i < count; ++i) {
      const std::string name = std::to_string(i) + ".png";
      write_png(root / "inputs" / name, 2, 2, 3, rgb);
      write_gray(root / "labels" / name, 2, 2, 255);
      m.pairs.push_back({"inputs/" + name, "labels/" + name});
    }
    save_manifest(m, root / "manifest.json");
    const auto loaded = load_manifest(root);
    CHECK(loaded.pairs.size() == count);
    CHECK(loaded.split == split);
  }
}

TEST_CASE("sample streams") {
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < 10; ++i) samples.push_back(synth_sample(SynthKind::bars, 32, 1, i));
  const InMemoryDataset data(samples);

  CHECK(visit_order(5, std::nullopt) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(visit_order(10, 3) == visit_order(10, 3));
  CHECK(visit_order(10, 3) != visit_order(10, 4));
  auto sorted = visit_order(10, 3);
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == visit_order(10, std::nullopt));

  SampleStream stream(data, 9);
  std::size_t n = 0;
  while (auto s = stream.next()) {
    CHECK(s->gt == samples[stream.order()[n]].gt);
    ++n;
  }
  CHECK(n == 10);

  CHECK_THROWS_AS(InMemoryDataset(std::vector<Sample>{}), UsageError);
}

TEST_CASE("ManifestDataset") {
  const auto dir = scratch_dir("manifest_dataset");
  const auto ds = gen_synthetic(SynthKind::lanes, 3, 32, 2, dir);
  for (std::size_t cache : {std::size_t{0}, std::size_t{1} << 30}) {
    const ManifestDataset data(load_manifest(dir), cache);
    CHECK(data.size() == 3);
    CHECK(data.get(1).gt == ds.samples[1].gt);
    CHECK(data.name(2) == ds.manifest.pairs[2].input);
  }
}
