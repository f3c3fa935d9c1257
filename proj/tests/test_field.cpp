#include <numbers>

#include "doctest.h"
#include "donn/field.hpp"
#include "test_support.hpp"

using namespace donn;
using donn::testing::random_field;
using donn::testing::small_grid;

TEST_CASE("GridSpec validation") {
  CHECK_NOTHROW(GridSpec::make(2, 1e-6, 1e-7));
  CHECK_THROWS_AS(GridSpec::make(1, 36e-6, 532e-9), DomainError);
  CHECK_THROWS_AS(GridSpec::make(16, 0.0, 532e-9), DomainError);
  CHECK_THROWS_AS(GridSpec::make(16, 36e-6, -1.0), DomainError);
  CHECK(GridSpec::make(400, 36e-6, 532e-9).aperture_m() == doctest::Approx(0.0144));
}

TEST_CASE("field_from_amplitude") {
  const auto grid = small_grid(4);

  SUBCASE("zero image") {
    const auto f = field_from_amplitude(RealImage(4, 0.0), grid);
    for (auto v : f.values()) CHECK(v == cdouble(0.0, 0.0));
  }
  SUBCASE("ones image") {
    const auto f = field_from_amplitude(RealImage(4, 1.0), grid);
    for (auto v : f.values()) CHECK(v == cdouble(1.0, 0.0));
  }
  SUBCASE("single pixel") {
    RealImage img(4, 0.0);
    img(0, 0) = 0.5;
    const auto f = field_from_amplitude(img, grid);
    CHECK(f(0, 0) == cdouble(0.5, 0.0));
    CHECK(f(1, 1) == cdouble(0.0, 0.0));
  }
  SUBCASE("sqrt encoding gives intensity p") {
    RealImage img(4, 0.25);
    const auto I = intensity(field_from_amplitude(img, grid, AmplitudeEncoding::sqrt));
    for (double v : I.values()) CHECK(v == doctest::Approx(0.25));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(field_from_amplitude(RealImage(5, 0.0), grid), DimensionError);
    RealImage bad(4, 0.0);
    bad(2, 3) = 1.5;
    CHECK_THROWS_AS(field_from_amplitude(bad, grid), DomainError);
    bad(2, 3) = -0.1;
    CHECK_THROWS_AS(field_from_amplitude(bad, grid), DomainError);
  }
}

TEST_CASE("amplitude encoding round trip squares the image") {
  const auto grid = small_grid(8);
  const auto img = donn::testing::random_image(8, 3);
  const auto I = intensity(field_from_amplitude(img, grid));
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(I.values()[i] == img[i] * img[i]);
}

TEST_CASE("intensity") {
  const auto grid = small_grid(2);
  ComplexField2D f(grid, {{3.0, 4.0}, {0.0, 0.0}, std::polar(1.0, 0.7), std::polar(1.0, -2.1)});
  const auto I = intensity(f);
  CHECK(I(0, 0) == 25.0);
  CHECK(I(0, 1) == 0.0);
  CHECK(I(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(I(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("intensity is invariant under a global phase") {
  const auto grid = small_grid(16);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = random_field(grid, 100 + trial);
    const auto rotated = scale_field(f, std::polar(1.0, phase(rng)));
    const auto a = intensity(f), b = intensity(rotated);
    for (std::size_t i = 0; i < a.values().size(); ++i) {
      CHECK(b.values()[i] == doctest::Approx(a.values()[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("add_fields") {
  const auto grid = small_grid(8);
  const auto a = random_field(grid, 1);
  const auto zero = ComplexField2D(grid);
  CHECK(add_fields(a, zero).values()[5] == a.values()[5]);

  const auto cancel = add_fields(a, scale_field(a, -1.0));
  for (auto v : cancel.values()) CHECK(std::abs(v) == 0.0);

  ComplexField2D one(grid), i(grid);
  for (auto& v : one.values()) v = 1.0;
  for (auto& v : i.values()) v = cdouble(0.0, 1.0);
  const auto sum = add_fields(one, i);
  for (auto v : sum.values()) CHECK(v == cdouble(1.0, 1.0));

  CHECK_THROWS_AS(add_fields(a, ComplexField2D(small_grid(4))), DimensionError);
  CHECK_THROWS_AS(add_fields(a, ComplexField2D(grid.with_wavelength(633e-9))), DimensionError);
}

TEST_CASE("coherent vs incoherent addition") {
  const auto grid = small_grid(8);
  const auto a = random_field(grid, 21), b = random_field(grid, 22);
  const auto coherent = intensity(add_fields(a, b));
  const std::vector<IntensityMap> parts{intensity(a), intensity(b)};
  const auto incoherent = add_intensities(parts);
  double diff = 0.0;
  for (std::size_t i = 0; i < coherent.values().size(); ++i) {
    diff += std::abs(coherent.values()[i] - incoherent.values()[i]);
    CHECK(incoherent.values()[i] == intensity(a).values()[i] + intensity(b).values()[i]);
  }
  CHECK(diff > 1.0);
}

TEST_CASE("add_intensities") {
  const auto grid = small_grid(4);
  const IntensityMap ones(grid, std::vector<double>(16, 1.0));
  const IntensityMap zero(grid);
  const auto I = intensity(random_field(grid, 5));

  const std::vector<IntensityMap> identity{I, zero, zero};
  CHECK(add_intensities(identity) == I);

  const std::vector<IntensityMap> three{ones, ones, ones};
  const auto total = add_intensities(three);
  for (double v : total.values()) CHECK(v == 3.0);

  CHECK_THROWS_AS(add_intensities(std::span<const IntensityMap>{}), UsageError);
  const std::vector<IntensityMap> mismatch{ones, IntensityMap(small_grid(8))};
  CHECK_THROWS_AS(add_intensities(mismatch), DimensionError);
}

TEST_CASE("constructor invariants") {
  const auto grid = small_grid(2);
  CHECK_THROWS_AS(ComplexField2D(grid, std::vector<cdouble>(3)), DimensionError);
  CHECK_THROWS_AS(ComplexField2D(grid, {0.0, 0.0, std::numeric_limits<double>::quiet_NaN(), 0.0}),
                  DomainError);
  CHECK_THROWS_AS(IntensityMap(grid, {0.0, -1.0, 0.0, 0.0}), DomainError);
}
