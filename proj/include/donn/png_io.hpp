#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace donn {

/// Decoded PNG: palette and low bit depths expanded, 8- or 16-bit samples, interleaved.
struct RasterImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 0;  ///< 1 gray, 2 gray+alpha, 3 RGB, 4 RGBA
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;

  double max_value() const { return bit_depth == 16 ? 65535.0 : 255.0; }
  std::uint16_t at(std::size_t row, std::size_t col, int channel) const {
    return samples[(row * width + col) * static_cast<std::size_t>(channels) + static_cast<std::size_t>(channel)];
  }
};

struct PngInfo {
  std::size_t width = 0;
  std::size_t height = 0;
};

/// Throws IoError when the file is missing or not a decodable PNG.
RasterImage read_png(const std::filesystem::path& path);

/// Reads only the signature and IHDR chunk.
PngInfo probe_png(const std::filesystem::path& path);

/// 8-bit gray (channels = 1) or RGB (channels = 3), row-major interleaved.
void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height, int channels,
               std::span<const std::uint8_t> pixels);

}  // namespace donn
