#include "avasd/model/asd_model.hpp"

#include <map>

#include "avasd/core/error.hpp"
#include "avasd/io/checkpoint.hpp"

namespace avasd {

template <typename T>
CombinedLoss<T> combined_loss(const HeadLogits<T>& logits, std::span<const int> labels,
                              double alpha_a, double alpha_v) {
  XentResult<T> av = softmax_xent(logits.av, labels);
  XentResult<T> a = softmax_xent(logits.a, labels);
  XentResult<T> v = softmax_xent(logits.v, labels);
  CombinedLoss<T> out;
  out.av = av.loss;
  out.a = a.loss;
  out.v = v.loss;
  out.total = av.loss + alpha_a * a.loss + alpha_v * v.loss;
  for (T& g : a.grad_logits.data()) g = static_cast<T>(g * alpha_a);
  for (T& g : v.grad_logits.data()) g = static_cast<T>(g * alpha_v);
  out.grad_av = std::move(av.grad_logits);
  out.grad_a = std::move(a.grad_logits);
  out.grad_v = std::move(v.grad_logits);
  return out;
}

template <typename T>
struct AsdModel<T>::Cache {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::size_t visual_width = 0;
  std::size_t audio_width = 0;
  Tensor<T> dropout_mask;
};

namespace {

template <typename T>
void add_blocks(Sequential<T>& seq, const std::string& prefix, const std::vector<ConvBlock>& blocks,
                std::size_t in_channels, std::size_t frames, Prng& prng) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const ConvBlock& b = blocks[i];
    const std::string name = prefix + ".block" + std::to_string(i);
    if (i == 0 && frames > 0) {
      seq.add(std::make_unique<FrameStackConv<T>>(name + ".conv", frames, b.kernel, b.channels, b.stride,
                                                  b.pad, prng));
    } else {
      seq.add(std::make_unique<Conv2dLayer<T>>(name + ".conv", in_channels, b.channels, b.kernel,
                                               b.stride, b.pad, false, prng));
    }
    seq.add(std::make_unique<BatchNormLayer<T>>(name + ".bn", b.channels));
    seq.add(std::make_unique<ReluLayer<T>>());
    if (b.pool_window > 0) seq.add(std::make_unique<MaxPoolLayer<T>>(b.pool_window, b.pool_stride));
    in_channels = b.channels;
  }
}

// flatten -> dense (no bias) -> batch norm -> ReLU
template <typename T>
void add_embedding(Sequential<T>& seq, const std::string& prefix, std::size_t in, std::size_t out,
                   Prng& prng) {
  seq.add(std::make_unique<FlattenLayer<T>>());
  seq.add(std::make_unique<DenseLayer<T>>(prefix + ".embed", in, out, DenseLayer<T>::Init::kHe, false, prng));
  seq.add(std::make_unique<BatchNormLayer<T>>(prefix + ".embed_bn", out));
  seq.add(std::make_unique<ReluLayer<T>>());
}

std::size_t product(const std::vector<std::size_t>& v) {
  std::size_t n = 1;
  for (auto d : v) n *= d;
  return n;
}

template <typename T>
Tensor<T> concat_last(const Tensor<T>& a, const Tensor<T>& b) {
  const std::size_t rows = a.size() / a.shape().back();
  const std::size_t wa = a.shape().back(), wb = b.shape().back();
  Shape s = a.shape();
  s.back() = wa + wb;
  Tensor<T> out(s);
  T* o = out.data().data();
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    o = std::copy(pa + r * wa, pa + (r + 1) * wa, o);
    o = std::copy(pb + r * wb, pb + (r + 1) * wb, o);
  }
  return out;
}

template <typename T>
void split_last(const Tensor<T>& g, Tensor<T>& a, Tensor<T>& b) {
  const std::size_t wa = a.shape().back(), wb = b.shape().back();
  const std::size_t rows = a.size() / wa;
  const T* src = g.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(src, src + wa, a.data().data() + r * wa);
    src += wa;
    std::copy(src, src + wb, b.data().data() + r * wb);
    src += wb;
  }
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

template <typename T>
AsdModel<T>::AsdModel(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)), dropout_prng_(Prng::for_stream(seed, 1)), cache_(std::make_unique<Cache>()) {
  config_.validate();
  Prng prng = Prng::for_stream(seed, 0);
  const ModelConfig& c = config_;

  add_blocks(visual_, "visual", c.visual_blocks, 1, c.frames_per_step, prng);
  add_embedding(visual_, "visual", product(c.visual_feature_shape()), c.visual_embedding, prng);

  switch (c.variant) {
    case Variant::kM1:
      audio_.add(std::make_unique<FlattenLayer<T>>());
      break;
    case Variant::kM2: {
      audio_.add(std::make_unique<FlattenLayer<T>>());
      std::size_t in = c.mfcc_coeffs * c.mfcc_frames;
      for (std::size_t i = 0; i < c.fc_widths.size(); ++i) {
        audio_.add(std::make_unique<DenseLayer<T>>("audio.fc" + std::to_string(i), in, c.fc_widths[i],
                                                   DenseLayer<T>::Init::kHe, true, prng));
        audio_.add(std::make_unique<ReluLayer<T>>());
        in = c.fc_widths[i];
      }
      break;
    }
    case Variant::kM3:
      add_blocks(audio_, "audio", c.audio_blocks, 1, 0, prng);
      add_embedding(audio_, "audio", product(c.audio_feature_shape()), c.audio_embedding, prng);
      break;
  }

  const std::size_t stream_out = 2 * c.stream_hidden;
  for (std::size_t l = 0; l < c.stream_bigru_layers; ++l) {
    visual_gru_.push_back(std::make_unique<BiGruLayer<T>>(
        "visual_gru" + std::to_string(l), l == 0 ? c.visual_embedding : stream_out, c.stream_hidden, prng));
  }
  for (std::size_t l = 0; l < c.stream_bigru_layers; ++l) {
    audio_gru_.push_back(std::make_unique<BiGruLayer<T>>(
        "audio_gru" + std::to_string(l), l == 0 ? c.audio_stream_width() : stream_out, c.stream_hidden, prng));
  }
  fusion_gru_ = std::make_unique<BiGruLayer<T>>("fusion_gru", 2 * stream_out, c.fusion_hidden, prng);
  using Init = typename DenseLayer<T>::Init;
  head_av_ = std::make_unique<DenseLayer<T>>("head_av", 2 * c.fusion_hidden, 2, Init::kGlorot, true, prng);
  head_a_ = std::make_unique<DenseLayer<T>>("head_a", stream_out, 2, Init::kGlorot, true, prng);
  head_v_ = std::make_unique<DenseLayer<T>>("head_v", stream_out, 2, Init::kGlorot, true, prng);
}

template <typename T>
AsdModel<T>::AsdModel(AsdModel&&) noexcept = default;
template <typename T>
AsdModel<T>& AsdModel<T>::operator=(AsdModel&&) noexcept = default;
template <typename T>
AsdModel<T>::~AsdModel() = default;

template <typename T>
Tensor<T> AsdModel<T>::visual_stream(const Tensor<T>& frames, Mode mode) {
  const ModelConfig& c = config_;
  if (frames.rank() != 4 || frames.dim(1) != c.frames_per_step || frames.dim(2) != c.image_size ||
      frames.dim(3) != c.image_size) {
    throw ShapeError("visual stream expects [N," + std::to_string(c.frames_per_step) + "," +
                     std::to_string(c.image_size) + "," + std::to_string(c.image_size) + "], got " +
                     shape_to_string(frames.shape()));
  }
  return visual_.forward(frames, mode);
}

template <typename T>
Tensor<T> AsdModel<T>::audio_stream(const Tensor<T>& tiles, Mode mode) {
  const ModelConfig& c = config_;
  if (tiles.rank() != 3 || tiles.dim(1) != c.mfcc_coeffs || tiles.dim(2) != c.mfcc_frames) {
    throw ShapeError("audio stream expects [N," + std::to_string(c.mfcc_coeffs) + "," +
                     std::to_string(c.mfcc_frames) + "], got " + shape_to_string(tiles.shape()));
  }
  if (c.variant == Variant::kM3) {
    return audio_.forward(tiles.reshaped({tiles.dim(0), tiles.dim(1), tiles.dim(2), 1}), mode);
  }
  return audio_.forward(tiles, mode);
}

template <typename T>
Tensor<T> AsdModel<T>::visual_temporal(const Tensor<T>& seq, Mode mode) {
  Tensor<T> h = visual_gru_.front()->forward(seq, mode);
  for (std::size_t l = 1; l < visual_gru_.size(); ++l) h = visual_gru_[l]->forward(h, mode);
  return h;
}

template <typename T>
Tensor<T> AsdModel<T>::audio_temporal(const Tensor<T>& seq, Mode mode) {
  Tensor<T> h = audio_gru_.front()->forward(seq, mode);
  for (std::size_t l = 1; l < audio_gru_.size(); ++l) h = audio_gru_[l]->forward(h, mode);
  return h;
}

template <typename T>
Tensor<T> AsdModel<T>::fuse_and_classify(const Tensor<T>& v_seq, const Tensor<T>& a_seq, Mode mode) {
  if (v_seq.rank() != 3 || a_seq.rank() != 3 || v_seq.dim(0) != a_seq.dim(0) || v_seq.dim(1) != a_seq.dim(1)) {
    throw ShapeError("fusion needs [B,T,F] streams with equal B and T, got " + shape_to_string(v_seq.shape()) +
                     " and " + shape_to_string(a_seq.shape()));
  }
  Cache& k = *cache_;
  k.batch = v_seq.dim(0);
  k.steps = v_seq.dim(1);
  k.visual_width = v_seq.dim(2);
  k.audio_width = a_seq.dim(2);
  DropoutResult<T> d = dropout(concat_last(v_seq, a_seq), config_.dropout_rate, mode, dropout_prng_);
  k.dropout_mask = std::move(d.mask);
  const Tensor<T> fused = fusion_gru_->forward(d.output, mode);
  return head_av_->forward(fused.reshaped({k.batch * k.steps, fused.dim(2)}), mode);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> AsdModel<T>::auxiliary_heads(const Tensor<T>& v_seq, const Tensor<T>& a_seq,
                                                             Mode mode) {
  const std::size_t rows = v_seq.dim(0) * v_seq.dim(1);
  Tensor<T> lv = head_v_->forward(v_seq.reshaped({rows, v_seq.dim(2)}), mode);
  Tensor<T> la = head_a_->forward(a_seq.reshaped({a_seq.dim(0) * a_seq.dim(1), a_seq.dim(2)}), mode);
  return {std::move(lv), std::move(la)};
}

template <typename T>
HeadLogits<T> AsdModel<T>::forward(const AvBatch<T>& batch, Mode mode) {
  const ModelConfig& c = config_;
  const Tensor<T>& video = batch.video;
  const Tensor<T>& audio = batch.audio;
  if (video.rank() != 5 || audio.rank() != 4 || video.dim(0) != audio.dim(0) || video.dim(1) != audio.dim(1)) {
    throw ShapeError("batch needs video [B,T,F,S,S] and audio [B,T,C,R] with equal B and T, got " +
                     shape_to_string(video.shape()) + " and " + shape_to_string(audio.shape()));
  }
  const std::size_t B = video.dim(0), steps = video.dim(1);
  if (!batch.labels.empty() && batch.labels.size() != B * steps) {
    throw ShapeError("batch has " + std::to_string(batch.labels.size()) + " labels for " +
                     std::to_string(B * steps) + " steps");
  }
  const Tensor<T> ve = visual_stream(
      video.reshaped({B * steps, video.dim(2), video.dim(3), video.dim(4)}), mode);
  const Tensor<T> v_seq = visual_temporal(ve.reshaped({B, steps, c.visual_embedding}), mode);
  const Tensor<T> ae = audio_stream(audio.reshaped({B * steps, audio.dim(2), audio.dim(3)}), mode);
  const Tensor<T> a_seq = audio_temporal(ae.reshaped({B, steps, ae.dim(1)}), mode);
  HeadLogits<T> out;
  out.av = fuse_and_classify(v_seq, a_seq, mode);
  auto [lv, la] = auxiliary_heads(v_seq, a_seq, mode);
  out.v = std::move(lv);
  out.a = std::move(la);
  return out;
}

template <typename T>
void AsdModel<T>::backward(const Tensor<T>& grad_av, const Tensor<T>& grad_a, const Tensor<T>& grad_v) {
  const Cache& k = *cache_;
  if (k.batch == 0) throw ArgumentError("backward called before a forward pass");
  const std::size_t B = k.batch, steps = k.steps;

  Tensor<T> g = head_av_->backward(grad_av);
  g = fusion_gru_->backward(g.reshaped({B, steps, g.dim(1)}));
  if (!k.dropout_mask.empty()) g = dropout_backward(k.dropout_mask, g);
  Tensor<T> gv({B, steps, k.visual_width});
  Tensor<T> ga({B, steps, k.audio_width});
  split_last(g, gv, ga);
  add_into(gv, head_v_->backward(grad_v));
  add_into(ga, head_a_->backward(grad_a));

  for (std::size_t l = visual_gru_.size(); l-- > 0;) gv = visual_gru_[l]->backward(gv);
  (void)visual_.backward(gv.reshaped({B * steps, gv.dim(2)}));
  for (std::size_t l = audio_gru_.size(); l-- > 0;) ga = audio_gru_[l]->backward(ga);
  (void)audio_.backward(ga.reshaped({B * steps, ga.dim(2)}));
}

template <typename T>
std::vector<double> AsdModel<T>::speaking_probability(const AvBatch<T>& batch) {
  const HeadLogits<T> logits = forward(batch, Mode::kInfer);
  std::vector<double> p(logits.av.dim(0));
  for (std::size_t i = 0; i < p.size(); ++i) {
    // softmax(z)[1] = 1 / (1 + exp(z0 - z1))
    const double d = static_cast<double>(logits.av(i, 0)) - static_cast<double>(logits.av(i, 1));
    p[i] = 1.0 / (1.0 + std::exp(d));
  }
  return p;
}

template <typename T>
std::vector<Parameter<T>*> AsdModel<T>::parameters() {
  std::vector<Parameter<T>*> out;
  visual_.collect_parameters(out);
  for (auto& g : visual_gru_) g->collect_parameters(out);
  audio_.collect_parameters(out);
  for (auto& g : audio_gru_) g->collect_parameters(out);
  fusion_gru_->collect_parameters(out);
  head_av_->collect_parameters(out);
  head_a_->collect_parameters(out);
  head_v_->collect_parameters(out);
  return out;
}

template <typename T>
std::vector<NamedBuffer<T>> AsdModel<T>::buffers() {
  std::vector<NamedBuffer<T>> out;
  visual_.collect_buffers(out);
  audio_.collect_buffers(out);
  return out;
}

template <typename T>
std::size_t AsdModel<T>::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->value.size();
  return n;
}

template <typename T>
std::size_t AsdModel<T>::audio_front_end_parameter_count() {
  std::vector<Parameter<T>*> ps;
  audio_.collect_parameters(ps);
  std::size_t n = 0;
  for (auto* p : ps) n += p->value.size();
  return n;
}

template <typename T>
void AsdModel<T>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename T>
io::Checkpoint AsdModel<T>::to_checkpoint() {
  io::Checkpoint ckpt;
  ckpt.config_json = config_.to_json();
  for (auto* p : parameters()) ckpt.entries.push_back({p->name, p->value.template cast<double>()});
  for (auto& b : buffers()) ckpt.entries.push_back({b.name, b.tensor->template cast<double>()});
  ckpt.entries.push_back({"norm.video", Tensor<double>({2}, {video_norm.mean, video_norm.var})});
  ckpt.entries.push_back({"norm.audio", Tensor<double>({2}, {audio_norm.mean, audio_norm.var})});
  return ckpt;
}

template <typename T>
void AsdModel<T>::load_state(const io::Checkpoint& ckpt) {
  std::map<std::string, Tensor<T>*> targets;
  for (auto* p : parameters()) targets[p->name] = &p->value;
  for (auto& b : buffers()) targets[b.name] = b.tensor;
  for (const auto& e : ckpt.entries) {
    if (e.name == "norm.video" || e.name == "norm.audio") continue;
    if (!targets.count(e.name)) {
      throw FormatError("checkpoint entry \"" + e.name + "\" does not exist in a " +
                        to_string(config_.variant) + " model with this configuration");
    }
  }
  for (const auto& [name, dest] : targets) {
    const io::CheckpointEntry* e = ckpt.find(name);
    if (!e) throw FormatError("checkpoint lacks \"" + name + "\" required by this model");
    if (e->value.shape() != dest->shape()) {
      throw FormatError("checkpoint entry \"" + name + "\" has shape " + shape_to_string(e->value.shape()) +
                        ", model expects " + shape_to_string(dest->shape()));
    }
  }
  for (const auto& [name, dest] : targets) *dest = ckpt.find(name)->value.template cast<T>();
  for (const char* key : {"norm.video", "norm.audio"}) {
    const io::CheckpointEntry* e = ckpt.find(key);
    if (!e) throw FormatError(std::string("checkpoint lacks \"") + key + "\"");
    if (e->value.size() != 2) throw FormatError(std::string("\"") + key + "\" must hold mean and variance");
    dsp::NormStats s{e->value[0], e->value[1]};
    (std::string(key) == "norm.video" ? video_norm : audio_norm) = s;
  }
}

template <typename T>
void save_model(AsdModel<T>& model, const std::filesystem::path& path) {
  io::save_checkpoint_file(path, model.to_checkpoint());
}

template <typename T>
AsdModel<T> model_from_checkpoint(const io::Checkpoint& ckpt) {
  AsdModel<T> model(ModelConfig::from_json(ckpt.config_json), 0);
  model.load_state(ckpt);
  return model;
}

template <typename T>
AsdModel<T> load_model(const std::filesystem::path& path) {
  return model_from_checkpoint<T>(io::load_checkpoint_file(path));
}

template <typename To, typename From>
AsdModel<To> convert_model(AsdModel<From>& model) {
  return model_from_checkpoint<To>(model.to_checkpoint());
}

#define AVASD_INSTANTIATE(T)                                                                       \
  template CombinedLoss<T> combined_loss(const HeadLogits<T>&, std::span<const int>, double, double); \
  template class AsdModel<T>;                                                                      \
  template void save_model(AsdModel<T>&, const std::filesystem::path&);                             \
  template AsdModel<T> model_from_checkpoint<T>(const io::Checkpoint&);                             \
  template AsdModel<T> load_model<T>(const std::filesystem::path&);

AVASD_INSTANTIATE(float)
AVASD_INSTANTIATE(double)
#undef AVASD_INSTANTIATE

template AsdModel<float> convert_model<float, double>(AsdModel<double>&);
template AsdModel<double> convert_model<double, float>(AsdModel<float>&);

}  // namespace avasd
