#include <set>
#include <tuple>

#include "doctest.h"
#include "donn/data.hpp"
#include "donn/grad.hpp"
#include "donn/log.hpp"
#include "donn/optim.hpp"
#include "test_support.hpp"

using namespace donn;
using namespace donn::testing;

namespace {

struct Problem {
  DonnModel model;
  RgbFields fields;
  BinaryMask gt;
};

Problem lane_problem(ModelConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  auto model = init_model(cfg);
  const std::size_t side = cfg.grid.side_px;
  const auto s = synth_sample(SynthKind::lanes, std::max<std::size_t>(side, 32), seed, 0);
  auto fields = encode_rgb(resize_bilinear(s.r, side), resize_bilinear(s.g, side), resize_bilinear(s.b, side), model);
  return {std::move(model), std::move(fields), resize_nearest(s.gt, side)};
}

double worst_error(const Problem& p, const LossSpec& loss, std::size_t coords, std::uint64_t seed,
                   AdjointMode mode = AdjointMode::exact) {
  const auto result = backward(p.model, p.fields, p.gt, loss, mode);
  const auto picks = sample_coords(p.model, coords, seed);
  const auto fd = finite_diff_grad(p.model, p.fields, p.gt, loss, picks);
  double worst = 0.0;
  for (std::size_t i = 0; i < picks.size(); ++i) {
    worst = std::max(worst, relative_error(result.grads.at(picks[i]), fd[i], 1e-8));
  }
  return worst;
}

}  // namespace

TEST_CASE("single layer gradient against finite differences") {
  auto p = lane_problem(small_config(16, 1, {}, 0.01, 0.01), 1);
  p.fields[1] = ComplexField2D(p.fields[1].grid());
  p.fields[2] = ComplexField2D(p.fields[2].grid());
  const auto loss = LossSpec::parse("mse");
  const auto result = backward(p.model, p.fields, p.gt, loss);
  // Coordinates in the lit channel only.
  std::vector<ParamCoord> picks;
  for (std::size_t i = 0; i < 20; ++i) picks.push_back({0, 0, (i * 37 + 5) % 256});
  const auto fd = finite_diff_grad(p.model, p.fields, p.gt, loss, picks);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    CHECK(relative_error(result.grads.at(picks[i]), fd[i], 1e-8) < 1e-5);
  }
}

TEST_CASE("lane-8 topology gradient through skips") {
  ScopedWarningCapture quiet;
  auto cfg = preset_config("lane-8", 32);
  cfg.z_m = 0.02;
  cfg.detector_z_m = 0.02;
  const auto p = lane_problem(cfg, 2);
  CHECK(worst_error(p, LossSpec::parse("bce"), 20, 3) < 1e-4);
}

TEST_CASE("gradient property grid") {
  ScopedWarningCapture quiet;
  const std::vector<std::string> losses{"mse", "bce", "dice", "wbce"};
  for (std::size_t layers : {1u, 3u, 8u}) {
    for (bool skips : {false, true}) {
      if (skips && layers < 3) continue;
      for (int pad : {1, 2}) {
        std::vector<SkipSpec> sk;
        if (skips) sk = layers == 3 ? std::vector<SkipSpec>{{1, 3}} : std::vector<SkipSpec>{{1, 6}, {2, 7}, {3, 8}};
        const auto p = lane_problem(small_config(16, layers, sk, 0.01, 0.01, pad), layers * 10 + pad);
        for (const auto& name : losses) {
          auto loss = LossSpec::parse(name);
          if (loss.auto_pos_weight) loss.pos_weight = balanced_pos_weight(std::vector<BinaryMask>{p.gt});
          CAPTURE(layers);
          CAPTURE(skips);
          CAPTURE(pad);
          CAPTURE(name);
          CHECK(worst_error(p, loss, 10, layers + pad) < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("corrupted adjoint is caught") {
  const auto p = lane_problem(small_config(16, 3, {{1, 3}}, 0.01, 0.01), 5);
  CHECK(worst_error(p, LossSpec::parse("mse"), 20, 6, AdjointMode::corrupted) > 1e-2);
}

TEST_CASE("backward loss equals forward loss exactly") {
  const auto p = lane_problem(small_config(16, 3, {{1, 3}}, 0.01, 0.01), 7);
  for (const auto& name : {"mse", "bce", "dice"}) {
    const auto loss = LossSpec::parse(name);
    CHECK(backward(p.model, p.fields, p.gt, loss).loss == forward_loss(p.model, p.fields, p.gt, loss));
  }
}

TEST_CASE("zero input has zero gradient") {
  const auto model = init_model(small_config(16, 3, {{1, 3}}));
  const ComplexField2D zero(model.grid());
  const auto result = backward(model, RgbFields{zero, zero, zero}, BinaryMask(16, 0), LossSpec::parse("mse"));
  CHECK(result.loss == 0.0);
  CHECK(result.grads.max_abs() == 0.0);
  CHECK(result.grads.congruent(model));
}

TEST_CASE("finite differences") {
  auto p = lane_problem(small_config(16, 2, {}, 0.01, 0.01), 8);
  p.fields[1] = ComplexField2D(p.fields[1].grid());
  const auto loss = LossSpec::parse("mse");

  SUBCASE("disconnected parameter") {
    const std::vector<ParamCoord> dark{{1, 0, 10}, {1, 1, 100}};
    for (double d : finite_diff_grad(p.model, p.fields, p.gt, loss, dark)) CHECK(d == 0.0);
  }
  SUBCASE("step-size robustness") {
    const std::vector<ParamCoord> picks{{0, 0, 17}, {0, 1, 130}, {2, 1, 77}};
    const auto a = finite_diff_grad(p.model, p.fields, p.gt, loss, picks, 1e-4);
    const auto b = finite_diff_grad(p.model, p.fields, p.gt, loss, picks, 1e-5);
    for (std::size_t i = 0; i < picks.size(); ++i) CHECK(relative_error(a[i], b[i], 1e-8) < 1e-3);
  }
  SUBCASE("coordinate budget") {
    const auto many = sample_coords(p.model, 101, 1);
    CHECK_THROWS_AS(finite_diff_grad(p.model, p.fields, p.gt, loss, many), UsageError);
  }
}

TEST_CASE("sample_coords") {
  const auto model = init_model(small_config(4, 2));
  const auto all = sample_coords(model, 96, 3);
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  for (const auto& c : all) {
    CHECK(c.channel < 3);
    CHECK(c.layer < 2);
    CHECK(c.index < 16);
    seen.insert({c.channel, c.layer, c.index});
  }
  CHECK(seen.size() == 96);
  CHECK_THROWS_AS(sample_coords(model, 97, 3), UsageError);
}

TEST_CASE("optim_step") {
  auto model = init_model(small_config(4, 2));
  const auto before = model.channel(0).mask(0).theta;

  SUBCASE("zero gradient is a fixed point") {
    auto state = OptimState::create(model);
    optim_step(model, GradientSet::zeros_like(model), state);
    CHECK(model.channel(0).mask(0).theta == before);
    CHECK(state.step == 1);
  }
  SUBCASE("first step moves by lr * sign(g)") {
    auto state = OptimState::create(model);
    auto g = GradientSet::zeros_like(model);
    for (std::size_t i = 0; i < 16; ++i) g.d_theta[0][0][i] = (i % 2 ? 1.0 : -1.0) * (0.001 + 0.1 * i);
    optim_step(model, g, state);
    for (std::size_t i = 0; i < 16; ++i) {
      const double sign = i % 2 ? 1.0 : -1.0;
      CHECK(model.channel(0).mask(0).theta[i] - before[i] == doctest::Approx(-0.01 * sign).epsilon(1e-4));
    }
    CHECK(model.channel(1).mask(1).theta == init_model(small_config(4, 2)).channel(1).mask(1).theta);
  }
  SUBCASE("shape mismatch") {
    auto state = OptimState::create(model);
    const auto other = init_model(small_config(4, 3));
    CHECK_THROWS_AS(optim_step(model, GradientSet::zeros_like(other), state), DimensionError);
  }
}
