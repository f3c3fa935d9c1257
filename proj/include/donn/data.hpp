#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "donn/field.hpp"

namespace donn {

/// Normalised RGB input with its binary ground truth.
struct Sample {
  RealImage r, g, b;
  BinaryMask gt;

  std::size_t side() const { return gt.side(); }
  /// Same side everywhere, channels in [0,1], gt binary.
  void validate() const;
};

struct ManifestEntry {
  std::string input;  ///< relative to the manifest root
  std::string label;
};

/// On disk: <root>/manifest.json listing <root>/inputs/*.png and <root>/labels/*.png.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> pairs;
  std::size_t side_px = 0;
  std::string split = "train";

  std::filesystem::path input_path(std::size_t i) const { return root / pairs.at(i).input; }
  std::filesystem::path label_path(std::size_t i) const { return root / pairs.at(i).label; }
};

inline constexpr const char* kManifestFileName = "manifest.json";

/// Parses and validates a manifest: non-empty, every listed file present with a PNG header.
/// Accepts the manifest file itself or the directory containing it.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& file);

/// Loads one pair: channels / bit-depth max, centre crop to square, bilinear resize;
/// label scaled, thresholded at 0.5, centre cropped and nearest-neighbour resized.
Sample load_sample(const std::filesystem::path& input, const std::filesystem::path& label,
                   std::size_t target_side);

/// Reads an RGB (or grey) PNG as three [0,1] planes, centre-cropped and resized.
std::array<RealImage, 3> load_rgb_planes(const std::filesystem::path& input, std::size_t target_side);

// Resampling helpers (exposed for tests).
RealImage resize_bilinear(const RealImage& src, std::size_t target_side);
BinaryMask resize_nearest(const BinaryMask& src, std::size_t target_side);

enum class SynthKind { bars, lanes };
SynthKind synth_kind_from_string(const std::string& name);
const char* to_string(SynthKind kind);

/// One synthetic sample, deterministic in (kind, side, seed, index).
Sample synth_sample(SynthKind kind, std::size_t side, std::uint64_t seed, std::size_t index);

struct GeneratedDataset {
  DatasetManifest manifest;
  std::filesystem::path manifest_path;
  std::vector<Sample> samples;  ///< in-memory arrays before 8-bit quantisation
};

/// Writes inputs/, labels/ and manifest.json under `out_dir`. Refuses to overwrite an
/// existing manifest unless `force`.
GeneratedDataset gen_synthetic(SynthKind kind, std::size_t count, std::size_t side, std::uint64_t seed,
                               const std::filesystem::path& out_dir, const std::string& split = "train",
                               bool force = false);

/// Random-access view over samples.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual std::size_t side() const = 0;
  virtual Sample get(std::size_t i) const = 0;
  virtual std::string name(std::size_t i) const { return std::to_string(i); }
};

class InMemoryDataset final : public SampleSource {
 public:
  explicit InMemoryDataset(std::vector<Sample> samples);
  std::size_t size() const override { return samples_.size(); }
  std::size_t side() const override { return side_; }
  Sample get(std::size_t i) const override { return samples_.at(i); }

 private:
  std::vector<Sample> samples_;
  std::size_t side_ = 0;
};

/// Samples decoded from a manifest; decoded up front when they fit in `cache_bytes`.
class ManifestDataset final : public SampleSource {
 public:
  explicit ManifestDataset(DatasetManifest manifest, std::size_t cache_bytes = std::size_t{1} << 30);
  std::size_t size() const override { return manifest_.pairs.size(); }
  std::size_t side() const override { return manifest_.side_px; }
  Sample get(std::size_t i) const override;
  std::string name(std::size_t i) const override { return manifest_.pairs.at(i).input; }
  const DatasetManifest& manifest() const { return manifest_; }

 private:
  DatasetManifest manifest_;
  std::vector<Sample> cache_;
};

/// Visit order for one pass; identity without a seed, a seeded permutation otherwise.
std::vector<std::size_t> visit_order(std::size_t count, std::optional<std::uint64_t> shuffle_seed);

/// Streaming iterator over a sample source.
class SampleStream {
 public:
  SampleStream(const SampleSource& source, std::optional<std::uint64_t> shuffle_seed);
  std::optional<Sample> next();
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  const SampleSource* source_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace donn
