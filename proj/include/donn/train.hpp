#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "donn/data.hpp"
#include "donn/grad.hpp"
#include "donn/metrics.hpp"
#include "donn/optim.hpp"

namespace donn {

inline constexpr std::size_t kDefaultBatchSize = 64;
inline constexpr int kDefaultEpochs = 500;
/// Samples per gradient partial; parallelism is over chunks.
inline constexpr std::size_t kReductionChunk = 8;

struct TrainOptions {
  std::size_t batch_size = kDefaultBatchSize;
  LossSpec loss;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  BinarizeMethod binarize = BinarizeMethod::half;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double train_iou = 0.0;
  std::size_t batches = 0;
};

/// Runs `fn(i)` for i in [0, count) on `workers` threads with a static contiguous split.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

RgbFields encode_sample(const Sample& sample, const DonnModel& model);

/// One pass over `data`, shuffled from (seed, epoch). Each batch's gradient is the mean
/// of per-sample gradients, reduced in a fixed order, followed by one optimizer step.
EpochStats train_epoch(DonnModel& model, const SampleSource& data, const TrainOptions& options,
                       OptimState& state, int epoch);

struct SampleMetrics {
  std::string name;
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::vector<SampleMetrics> samples;
  double mean_iou = 0.0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f1 = 0.0;
};

/// Per-sample metrics of the binarized detector output; dataset figures are per-sample means.
EvalReport evaluate(const DonnModel& model, const SampleSource& data,
                    BinarizeMethod binarize = BinarizeMethod::half, std::size_t workers = 1);

}  // namespace donn
