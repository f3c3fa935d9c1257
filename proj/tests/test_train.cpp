#include <atomic>

#include "doctest.h"
#include "donn/checkpoint.hpp"
#include "donn/train.hpp"
#include "test_support.hpp"

using namespace donn;
using namespace donn::testing;

namespace {

InMemoryDataset toy_lanes(std::size_t count, std::uint64_t seed) {
  std::vector<Sample> s;
  for (std::size_t i = 0; i < count; ++i) s.push_back(synth_sample(SynthKind::lanes, 32, seed, i));
  return InMemoryDataset(std::move(s));
}

class EmptySource final : public SampleSource {
 public:
  std::size_t size() const override { return 0; }
  std::size_t side() const override { return 32; }
  Sample get(std::size_t) const override { throw UsageError("empty"); }
};

}  // namespace

TEST_CASE("parallel_for covers every index once") {
  for (std::size_t workers : {1u, 2u, 5u, 20u}) {
    std::vector<std::atomic<int>> hits(13);
    parallel_for(13, workers, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(4, 2, [](std::size_t i) {
                    if (i == 3) throw DomainError("boom");
                  }),
                  DomainError);
}

TEST_CASE("default batch size") { CHECK(TrainOptions{}.batch_size == 64); }

TEST_CASE("training loss decreases on the toy set") {
  const auto data = toy_lanes(16, 1);
  auto model = init_model(small_config(32, 3, {{1, 3}}, 0.01, 0.01));
  auto state = OptimState::create(model, {0.05});
  TrainOptions opt;
  opt.batch_size = 4;
  opt.seed = 3;
  std::vector<double> losses;
  for (int e = 0; e < 20; ++e) losses.push_back(train_epoch(model, data, opt, state, e).mean_loss);
  const double first = (losses[0] + losses[1] + losses[2]) / 3.0;
  const double last = (losses[17] + losses[18] + losses[19]) / 3.0;
  CHECK(last < first);
  CHECK(state.step == 20 * 4);
}

TEST_CASE("zero learning rate leaves the checkpoint unchanged") {
  const auto data = toy_lanes(6, 2);
  auto model = init_model(small_config(32, 2, {}, 0.01, 0.01));
  const auto before = serialize_checkpoint(model, 0);
  auto state = OptimState::create(model, {0.0});
  TrainOptions opt;
  opt.batch_size = 4;
  const auto stats = train_epoch(model, data, opt, state, 0);
  CHECK(stats.batches == 2);
  CHECK(serialize_checkpoint(model, 0) == before);
}

TEST_CASE("training is reproducible across runs and worker counts") {
  const auto data = toy_lanes(20, 3);
  std::vector<std::string> finals;
  std::vector<double> losses;
  for (std::size_t workers : {1u, 1u, 3u}) {
    auto model = init_model(small_config(32, 2, {}, 0.01, 0.01));
    auto state = OptimState::create(model);
    TrainOptions opt;
    opt.batch_size = 20;
    opt.seed = 5;
    opt.workers = workers;
    opt.loss = LossSpec::parse("wbce");
    double l = 0.0;
    for (int e = 0; e < 3; ++e) l = train_epoch(model, data, opt, state, e).mean_loss;
    finals.push_back(serialize_checkpoint(model, 3));
    losses.push_back(l);
  }
  CHECK(finals[0] == finals[1]);
  CHECK(finals[0] == finals[2]);
  CHECK(losses[0] == losses[2]);
}

TEST_CASE("train_epoch errors") {
  auto model = init_model(small_config(32, 1));
  auto state = OptimState::create(model);
  CHECK_THROWS_AS(train_epoch(model, EmptySource{}, {}, state, 0), UsageError);
  TrainOptions zero_batch;
  zero_batch.batch_size = 0;
  CHECK_THROWS_AS(train_epoch(model, toy_lanes(2, 1), zero_batch, state, 0), UsageError);

  auto small = init_model(small_config(16, 1));
  auto small_state = OptimState::create(small);
  CHECK_THROWS_AS(train_epoch(small, toy_lanes(2, 1), {}, small_state, 0), DimensionError);
}

TEST_CASE("evaluate") {
  const auto data = toy_lanes(5, 4);
  const auto model = init_model(small_config(32, 2, {}, 0.01, 0.01));
  const auto serial = evaluate(model, data);
  const auto parallel = evaluate(model, data, BinarizeMethod::half, 3);
  REQUIRE(serial.samples.size() == 5);
  double mean = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(serial.samples[i].iou == parallel.samples[i].iou);
    const auto s = data.get(i);
    const auto fields = encode_sample(s, model);
    CHECK(serial.samples[i].iou == iou(binarize_output(forward_rgb(fields, model)), s.gt));
    mean += serial.samples[i].iou;
  }
  CHECK(serial.mean_iou == doctest::Approx(mean / 5.0).epsilon(1e-15));
  CHECK(serial.mean_iou == parallel.mean_iou);
  CHECK_THROWS_AS(evaluate(model, EmptySource{}), UsageError);
}
