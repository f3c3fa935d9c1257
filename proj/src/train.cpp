#include "donn/train.hpp"

#include <algorithm>
#include <exception>
#include <thread>

namespace donn {

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w * count / workers; i < (w + 1) * count / workers; ++i) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

RgbFields encode_sample(const Sample& sample, const DonnModel& model) {
  if (sample.side() != model.grid().side_px) {
    throw DimensionError("sample side " + std::to_string(sample.side()) + " != model side " +
                         std::to_string(model.grid().side_px));
  }
  return encode_rgb(sample.r, sample.g, sample.b, model);
}

EpochStats train_epoch(DonnModel& model, const SampleSource& data, const TrainOptions& options,
                       OptimState& state, int epoch) {
  if (data.size() == 0) throw UsageError("train_epoch: empty dataset");
  if (options.batch_size == 0) throw UsageError("train_epoch: batch size must be >= 1");
  const std::uint64_t shuffle_seed =
      options.seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(epoch + 1));
  const auto order = visit_order(data.size(), shuffle_seed);

  EpochStats stats;
  stats.epoch = epoch;
  double loss_sum = 0.0, iou_sum = 0.0;

  for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
    const std::size_t n = std::min(options.batch_size, order.size() - start);
    std::vector<Sample> batch;
    batch.reserve(n);
    for (std::size_t k = 0; k < n; ++k) batch.push_back(data.get(order[start + k]));

    LossSpec loss = options.loss;
    if (loss.auto_pos_weight) {
      std::vector<BinaryMask> masks;
      for (const auto& s : batch) masks.push_back(s.gt);
      loss.pos_weight = balanced_pos_weight(masks);
    }

    // Fixed-size chunks are summed in sample order, then chunk partials in chunk order,
    // so the reduction does not depend on the worker count.
    const std::size_t chunks = (n + kReductionChunk - 1) / kReductionChunk;
    std::vector<GradientSet> partial(chunks, GradientSet::zeros_like(model));
    std::vector<double> losses(n), ious(n);
    const DonnModel& frozen = model;
    parallel_for(chunks, options.workers, [&](std::size_t c) {
      for (std::size_t k = c * kReductionChunk; k < std::min(n, (c + 1) * kReductionChunk); ++k) {
        const auto result = backward(frozen, encode_sample(batch[k], frozen), batch[k].gt, loss);
        partial[c].add(result.grads);
        losses[k] = result.loss;
        ious[k] = iou(binarize_output(result.detector, options.binarize), batch[k].gt);
      }
    });
    GradientSet total = std::move(partial[0]);
    for (std::size_t c = 1; c < chunks; ++c) total.add(partial[c]);
    total.scale(1.0 / static_cast<double>(n));
    optim_step(model, total, state);

    for (std::size_t k = 0; k < n; ++k) {
      loss_sum += losses[k];
      iou_sum += ious[k];
    }
    ++stats.batches;
  }
  stats.mean_loss = loss_sum / static_cast<double>(order.size());
  stats.train_iou = iou_sum / static_cast<double>(order.size());
  return stats;
}

EvalReport evaluate(const DonnModel& model, const SampleSource& data, BinarizeMethod binarize,
                    std::size_t workers) {
  if (data.size() == 0) throw UsageError("evaluate: empty dataset");
  EvalReport report;
  report.samples.resize(data.size());
  parallel_for(data.size(), workers, [&](std::size_t i) {
    const Sample s = data.get(i);
    const BinaryMask pred = binarize_output(forward_rgb(encode_sample(s, model), model), binarize);
    const auto m = prf1(pred, s.gt);
    report.samples[i] = {data.name(i), iou(pred, s.gt), m.precision, m.recall, m.f1};
  });
  for (const auto& s : report.samples) {
    report.mean_iou += s.iou;
    report.mean_precision += s.precision;
    report.mean_recall += s.recall;
    report.mean_f1 += s.f1;
  }
  const double n = static_cast<double>(report.samples.size());
  report.mean_iou /= n;
  report.mean_precision /= n;
  report.mean_recall /= n;
  report.mean_f1 /= n;
  return report;
}

}  // namespace donn
