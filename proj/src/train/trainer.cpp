#include "avasd/train/trainer.hpp"

#include <chrono>
#include <cmath>

#include "avasd/core/error.hpp"
#include "avasd/core/parameter.hpp"
#include "avasd/train/batching.hpp"
#include "avasd/train/metrics.hpp"

namespace avasd {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must lie in [0, 1)");
  if (batch_size < 2 || batch_size % 2 != 0) throw ArgumentError("batch size must be even and >= 2");
  if (max_epochs == 0) throw ArgumentError("max epochs must be positive");
  if (patience == 0) throw ArgumentError("patience must be positive");
}

Evaluator av_auc_evaluator(std::span<const data::AvSequence> val) {
  return [val](AsdModel<double>& m) {
    const HeadScores s = score_sequences(m, val);
    return compute_auc(s.av, s.labels);
  };
}

TrainHistory train(AsdModel<double>& model, std::span<const data::AvSequence> train_set,
                   const Evaluator& evaluator, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw ArgumentError("empty training split");
  const ModelConfig& mc = model.config();
  if (train_set[0].steps() != mc.seq_len) {
    throw ShapeError("training sequences have " + std::to_string(train_set[0].steps()) +
                     " steps, the model expects " + std::to_string(mc.seq_len));
  }
  std::vector<int> classes;
  classes.reserve(train_set.size());
  for (const auto& s : train_set) classes.push_back(majority_label(s.labels));

  const SgdConfig sgd{cfg.learning_rate, cfg.momentum, mc.l2_alpha};
  Prng batch_prng = Prng::for_stream(cfg.seed, 2);
  auto params = model.parameters();
  model.zero_grad();

  TrainHistory history;
  io::Checkpoint best;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batches = balanced_batches(classes, cfg.batch_size, batch_prng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const AvBatch<double> batch = make_batch<double>(train_set, batches[b]);
      const HeadLogits<double> logits = model.forward(batch, Mode::kTrain);
      const CombinedLoss<double> loss = combined_loss(logits, batch.labels, mc.alpha_a, mc.alpha_v);
      if (!std::isfinite(loss.total)) {
        throw NumericError("non-finite loss " + std::to_string(loss.total) + " at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b + 1) + " of " + std::to_string(batches.size()));
      }
      model.backward(loss.grad_av, loss.grad_a, loss.grad_v);
      sgd_step<double>(params, sgd);
      loss_sum += loss.total;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_sum / static_cast<double>(batches.size());
    rec.val_auc = evaluator(model);
    if (!std::isfinite(rec.val_auc)) throw NumericError("validation score is not finite at epoch " + std::to_string(epoch));
    rec.improved = history.epochs.empty() || rec.val_auc > history.best_val_auc;
    if (rec.improved) {
      history.best_epoch = epoch;
      history.best_val_auc = rec.val_auc;
      best = model.to_checkpoint();
      stale = 0;
    } else {
      ++stale;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (stale >= cfg.patience) {
      history.stopped_early = true;
      break;
    }
  }
  model.load_state(best);
  return history;
}

}  // namespace avasd
