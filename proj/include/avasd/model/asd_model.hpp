#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "avasd/core/ops.hpp"
#include "avasd/core/parameter.hpp"
#include "avasd/dsp/mfcc.hpp"
#include "avasd/io/checkpoint.hpp"
#include "avasd/model/config.hpp"
#include "avasd/model/layers.hpp"

namespace avasd {

/// B sequences of T steps. Labels, when present, are row-major (b, t).
template <typename T>
struct AvBatch {
  Tensor<T> video;  // [B, T, frames, S, S]
  Tensor<T> audio;  // [B, T, coeffs, frames]
  std::vector<int> labels;

  std::size_t batch_size() const { return video.dim(0); }
  std::size_t steps() const { return video.dim(1); }
};

/// Per-step logits of the three classifiers, each [B*T, 2].
template <typename T>
struct HeadLogits {
  Tensor<T> av;
  Tensor<T> a;
  Tensor<T> v;
};

template <typename T>
struct CombinedLoss {
  double total = 0.0;
  double av = 0.0;
  double a = 0.0;
  double v = 0.0;
  Tensor<T> grad_av;
  Tensor<T> grad_a;
  Tensor<T> grad_v;
};

/// total = L_av + alpha_a * L_a + alpha_v * L_v, each a mean cross-entropy
/// over all B*T steps. Gradients are already scaled by their weights.
template <typename T>
CombinedLoss<T> combined_loss(const HeadLogits<T>& logits, std::span<const int> labels,
                              double alpha_a, double alpha_v);

/// Two-stream detector: per-step visual and audio embeddings, a BiGRU stack
/// per stream, late fusion through dropout and one more BiGRU, and three
/// per-step classifiers (fused, audio-only, visual-only).
template <typename T>
class AsdModel {
 public:
  AsdModel(ModelConfig config, std::uint64_t seed);
  AsdModel(AsdModel&&) noexcept;
  AsdModel& operator=(AsdModel&&) noexcept;
  ~AsdModel();

  const ModelConfig& config() const noexcept { return config_; }

  /// [N, frames, S, S] -> [N, visual_embedding]
  Tensor<T> visual_stream(const Tensor<T>& frames, Mode mode);
  /// [N, coeffs, frames] -> [N, audio_stream_width]
  Tensor<T> audio_stream(const Tensor<T>& tiles, Mode mode);
  /// [B, T, F] -> [B, T, 2 * stream_hidden]
  Tensor<T> visual_temporal(const Tensor<T>& seq, Mode mode);
  Tensor<T> audio_temporal(const Tensor<T>& seq, Mode mode);
  /// concat -> dropout -> BiGRU -> dense, giving [B*T, 2]
  Tensor<T> fuse_and_classify(const Tensor<T>& v_seq, const Tensor<T>& a_seq, Mode mode);
  /// (logits_v, logits_a), each [B*T, 2]
  std::pair<Tensor<T>, Tensor<T>> auxiliary_heads(const Tensor<T>& v_seq, const Tensor<T>& a_seq,
                                                  Mode mode);

  HeadLogits<T> forward(const AvBatch<T>& batch, Mode mode);

  /// Backpropagates through the most recent training-mode forward and
  /// accumulates into every parameter's gradient.
  void backward(const Tensor<T>& grad_av, const Tensor<T>& grad_a, const Tensor<T>& grad_v);

  /// Infer-mode forward; returns P(speaking) per step, row-major (b, t).
  std::vector<double> speaking_probability(const AvBatch<T>& batch);

  std::vector<Parameter<T>*> parameters();
  std::vector<NamedBuffer<T>> buffers();
  std::size_t parameter_count();
  std::size_t audio_front_end_parameter_count();
  void zero_grad();

  /// Re-seeds the dropout mask stream.
  void set_dropout_seed(std::uint64_t seed) { dropout_prng_ = Prng(seed); }

  /// Feature normalization fitted on the training split; saved with the model.
  dsp::NormStats video_norm;
  dsp::NormStats audio_norm;

  /// Parameters, batch-norm running statistics and normalization statistics
  /// as named double tensors.
  io::Checkpoint to_checkpoint();
  /// Requires exactly the same set of names and shapes; throws FormatError
  /// naming the first missing, unexpected or mis-shaped entry.
  void load_state(const io::Checkpoint& ckpt);

  DenseLayer<T>& head_av() { return *head_av_; }
  DenseLayer<T>& head_a() { return *head_a_; }
  DenseLayer<T>& head_v() { return *head_v_; }
  BiGruLayer<T>& fusion_gru() { return *fusion_gru_; }

 private:
  struct Cache;

  ModelConfig config_;
  Sequential<T> visual_;
  Sequential<T> audio_;
  std::vector<std::unique_ptr<BiGruLayer<T>>> visual_gru_;
  std::vector<std::unique_ptr<BiGruLayer<T>>> audio_gru_;
  std::unique_ptr<BiGruLayer<T>> fusion_gru_;
  std::unique_ptr<DenseLayer<T>> head_av_;
  std::unique_ptr<DenseLayer<T>> head_a_;
  std::unique_ptr<DenseLayer<T>> head_v_;
  Prng dropout_prng_;
  std::unique_ptr<Cache> cache_;
};

template <typename T>
void save_model(AsdModel<T>& model, const std::filesystem::path& path);

/// Rebuilds the model from the stored configuration, then loads its state.
template <typename T>
AsdModel<T> model_from_checkpoint(const io::Checkpoint& ckpt);

template <typename T>
AsdModel<T> load_model(const std::filesystem::path& path);

/// Same architecture and state at another precision.
template <typename To, typename From>
AsdModel<To> convert_model(AsdModel<From>& model);

}  // namespace avasd
