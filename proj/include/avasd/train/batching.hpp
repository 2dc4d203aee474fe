#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "avasd/core/prng.hpp"
#include "avasd/data/dataset.hpp"
#include "avasd/model/asd_model.hpp"

namespace avasd {

/// 1 when strictly more than half of the steps are labeled speaking.
int majority_label(std::span<const int> step_labels);

/// One epoch of sequence indices. Each batch holds batch_size/2 sequences
/// of either majority class. The epoch runs until the larger class has been
/// seen once; the smaller class, and the tail of the larger one, are
/// topped up by drawing with replacement.
std::vector<std::vector<std::size_t>> balanced_batches(std::span<const int> sequence_classes,
                                                       std::size_t batch_size, Prng& prng);

/// Stacks sequences into [B, T, ...] tensors.
template <typename T>
AvBatch<T> make_batch(std::span<const data::AvSequence> seqs, std::span<const std::size_t> indices);

}  // namespace avasd
