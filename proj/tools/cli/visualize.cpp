#include <algorithm>
#include <cmath>
#include <fstream>

#include "cli.hpp"
#include "donn/png_io.hpp"

namespace donn::cli {
namespace {

std::uint8_t quantize(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

constexpr std::size_t kGap = 2;

}  // namespace

std::vector<std::uint8_t> to_gray8(std::span<const double> values) {
  std::vector<std::uint8_t> px(values.size(), 0);
  if (values.empty()) return px;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (range <= 0.0) return px;
  for (std::size_t i = 0; i < values.size(); ++i) px[i] = quantize((values[i] - *lo) / range);
  return px;
}

void write_intensity_png(const std::filesystem::path& png, const IntensityMap& map) {
  const std::size_t n = map.grid().side_px;
  write_png(png, n, n, 1, to_gray8(map.values()));
}

void write_mask_png(const std::filesystem::path& png, const BinaryMask& mask) {
  std::vector<std::uint8_t> px(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) px[i] = mask[i] ? 255 : 0;
  write_png(png, mask.side(), mask.side(), 1, px);
}

void write_panel(const std::filesystem::path& png, const Sample& sample, const IntensityMap& detector,
                 const BinaryMask& binarized) {
  const std::size_t n = sample.side();
  const std::size_t width = 4 * n + 3 * kGap;
  std::vector<std::uint8_t> px(width * n * 3, 255);
  const auto raw = to_gray8(detector.values());

  auto put = [&](std::size_t panel, std::size_t r, std::size_t c, std::uint8_t red, std::uint8_t green,
                 std::uint8_t blue) {
    const std::size_t at = (r * width + panel * (n + kGap) + c) * 3;
    px[at] = red;
    px[at + 1] = green;
    px[at + 2] = blue;
  };
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = r * n + c;
      put(0, r, c, quantize(sample.r[i]), quantize(sample.g[i]), quantize(sample.b[i]));
      const std::uint8_t gt = sample.gt[i] ? 255 : 0;
      put(1, r, c, gt, gt, gt);
      put(2, r, c, raw[i], raw[i], raw[i]);
      const std::uint8_t bin = binarized[i] ? 255 : 0;
      put(3, r, c, bin, bin, bin);
    }
  }
  write_png(png, width, n, 3, px);

  auto caption_path = png;
  caption_path.replace_extension(".txt");
  std::ofstream caption(caption_path);
  caption << "panels (left to right): input RGB | ground truth | raw detector intensity | binarized output\n"
          << "raw intensity is min-max mapped per image to 0..255: min " << detector.min() << ", max "
          << detector.max() << "\n"
          << "binarized: min-max normalised intensity thresholded; white = foreground\n";
  if (!caption) throw IoError("cannot write caption " + caption_path.string());
}

}  // namespace donn::cli
