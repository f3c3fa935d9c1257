#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "donn/field.hpp"
#include "donn/model.hpp"

namespace donn::testing {

inline ComplexField2D random_field(const GridSpec& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexField2D f(grid);
  for (auto& v : f.values()) v = {n(rng), n(rng)};
  return f;
}

/// Smooth complex field concentrated in the centre (Gaussian envelope, sigma in px).
inline ComplexField2D central_field(const GridSpec& grid, std::uint64_t seed, double sigma_px) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = u(rng), phase = 3.0 * u(rng), kx = 0.2 * u(rng), ky = 0.2 * u(rng);
  const double c = static_cast<double>(grid.side_px) / 2.0;
  ComplexField2D f(grid);
  for (std::size_t r = 0; r < grid.side_px; ++r) {
    for (std::size_t col = 0; col < grid.side_px; ++col) {
      const double x = static_cast<double>(col) - c, y = static_cast<double>(r) - c;
      const double env = std::exp(-(x * x + y * y) / (2.0 * sigma_px * sigma_px));
      f(r, col) = env * (1.0 + 0.3 * a * x / sigma_px + 0.3 * b * y / sigma_px) *
                  std::polar(1.0, phase + kx * x + ky * y);
    }
  }
  return f;
}

inline RealImage random_image(std::size_t side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealImage img(side);
  for (auto& v : img) v = u(rng);
  return img;
}

inline BinaryMask random_mask(std::size_t side, std::uint64_t seed, double density = 0.3) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(density);
  BinaryMask m(side);
  for (auto& v : m) v = b(rng) ? 1 : 0;
  return m;
}

/// ||a - b|| / ||b||
inline double relative_l2(const ComplexField2D& a, const ComplexField2D& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    num += std::norm(a.values()[i] - b.values()[i]);
    den += std::norm(b.values()[i]);
  }
  return std::sqrt(num / den);
}

inline double max_abs_diff(const ComplexField2D& a, const ComplexField2D& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("donn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline GridSpec small_grid(std::size_t side) { return GridSpec::make(side, 36e-6, 532e-9); }

/// Custom model on a small grid; detector directly after the last mask unless given.
inline ModelConfig small_config(std::size_t side, std::size_t layers, std::vector<SkipSpec> skips = {},
                                double z = 0.01, double detector_z = 0.0, int pad = 2) {
  ModelConfig cfg;
  cfg.grid = small_grid(side);
  cfg.layers = layers;
  cfg.skips = std::move(skips);
  cfg.z_m = z;
  cfg.detector_z_m = detector_z;
  cfg.pad_factor = pad;
  return cfg;
}

inline RgbFields random_rgb(const DonnModel& model, std::uint64_t seed) {
  return {random_field(model.channel(0).grid(), seed), random_field(model.channel(1).grid(), seed + 1),
          random_field(model.channel(2).grid(), seed + 2)};
}

}  // namespace donn::testing
