#include "avasd/train/batching.hpp"

#include <algorithm>

#include "avasd/core/error.hpp"

namespace avasd {

int majority_label(std::span<const int> step_labels) {
  std::size_t pos = 0;
  for (int l : step_labels) pos += l == 1;
  return 2 * pos > step_labels.size() ? 1 : 0;
}

namespace {

// `count` indices from `pool`: whole shuffled passes, then a partial tail
// drawn with replacement.
std::vector<std::size_t> draw(std::vector<std::size_t> pool, std::size_t count, Prng& prng) {
  std::vector<std::size_t> out;
  out.reserve(count);
  prng.shuffle(pool.begin(), pool.end());
  const std::size_t whole = std::min(count, pool.size());
  out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(whole));
  while (out.size() < count) out.push_back(pool[prng.below(pool.size())]);
  return out;
}

}  // namespace

std::vector<std::vector<std::size_t>> balanced_batches(std::span<const int> sequence_classes,
                                                       std::size_t batch_size, Prng& prng) {
  if (batch_size < 2 || batch_size % 2 != 0) {
    throw ArgumentError("balanced batches need an even batch size >= 2, got " + std::to_string(batch_size));
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < sequence_classes.size(); ++i) {
    (sequence_classes[i] == 1 ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty()) {
    throw ArgumentError("cannot balance batches: no " + std::string(pos.empty() ? "positive" : "negative") +
                        "-majority sequences among " + std::to_string(sequence_classes.size()));
  }
  const std::size_t half = batch_size / 2;
  const std::size_t n_batches = (std::max(pos.size(), neg.size()) + half - 1) / half;
  const std::vector<std::size_t> p = draw(std::move(pos), n_batches * half, prng);
  const std::vector<std::size_t> n = draw(std::move(neg), n_batches * half, prng);

  std::vector<std::vector<std::size_t>> batches(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    auto& batch = batches[b];
    batch.insert(batch.end(), p.begin() + b * half, p.begin() + (b + 1) * half);
    batch.insert(batch.end(), n.begin() + b * half, n.begin() + (b + 1) * half);
    prng.shuffle(batch.begin(), batch.end());
  }
  return batches;
}

template <typename T>
AvBatch<T> make_batch(std::span<const data::AvSequence> seqs, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ArgumentError("empty batch");
  const data::AvSequence& first = seqs[indices[0]];
  Shape vshape{indices.size()};
  Shape ashape{indices.size()};
  for (std::size_t d : first.video.shape()) vshape.push_back(d);
  for (std::size_t d : first.audio.shape()) ashape.push_back(d);
  AvBatch<T> batch{Tensor<T>(vshape), Tensor<T>(ashape), {}};
  T* v = batch.video.data().data();
  T* a = batch.audio.data().data();
  for (std::size_t i : indices) {
    const data::AvSequence& s = seqs[i];
    if (s.video.shape() != first.video.shape() || s.audio.shape() != first.audio.shape()) {
      throw ShapeError("sequence " + s.id + " differs in shape from " + first.id);
    }
    v = std::copy(s.video.data().begin(), s.video.data().end(), v);
    a = std::copy(s.audio.data().begin(), s.audio.data().end(), a);
    batch.labels.insert(batch.labels.end(), s.labels.begin(), s.labels.end());
  }
  return batch;
}

template AvBatch<float> make_batch(std::span<const data::AvSequence>, std::span<const std::size_t>);
template AvBatch<double> make_batch(std::span<const data::AvSequence>, std::span<const std::size_t>);

}  // namespace avasd
