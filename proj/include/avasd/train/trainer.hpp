#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "avasd/data/dataset.hpp"
#include "avasd/model/asd_model.hpp"

namespace avasd {

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 16;  // sequences, half of each majority class
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double val_auc = 0.0;
  bool improved = false;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_auc = 0.0;
  bool stopped_early = false;
};

/// Returns the validation score that early stopping monitors.
using Evaluator = std::function<double(AsdModel<double>&)>;

/// Validation AUC of the fused head.
Evaluator av_auc_evaluator(std::span<const data::AvSequence> val);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Momentum SGD on balanced batches. After every epoch the evaluator scores
/// the model; the best state is kept, and training stops once `patience`
/// consecutive epochs fail to beat it strictly. On return the model holds
/// the best state. A non-finite loss raises NumericError naming the epoch
/// and batch.
TrainHistory train(AsdModel<double>& model, std::span<const data::AvSequence> train_set,
                   const Evaluator& evaluator, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace avasd
