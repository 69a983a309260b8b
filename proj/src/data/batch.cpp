#include "audiomorph/data/batch.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "audiomorph/detail/bytes.hpp"
#include "audiomorph/error.hpp"

namespace audiomorph::data {

PaddedBatch make_batch(std::span<const TransformExample> examples, std::span<const std::size_t> indices,
                       std::size_t pad_source_to, std::size_t pad_target_to) {
  PaddedBatch b;
  b.size = indices.size();
  if (b.size == 0) return b;
  b.n_mels = examples[indices[0]].source.bins;
  b.source_frames = pad_source_to;
  b.target_frames = pad_target_to;
  for (auto i : indices) {
    if (i >= examples.size()) throw InvalidInput("batch index out of range");
    const auto& ex = examples[i];
    if (ex.source.bins != b.n_mels || ex.target.bins != b.n_mels)
      throw ShapeError("batch examples disagree on mel width");
    b.source_frames = std::max(b.source_frames, ex.source.frames);
    b.target_frames = std::max(b.target_frames, ex.target.frames);
  }
  const std::size_t m = b.n_mels;
  b.source.assign(b.size * b.source_frames * m, 0.0f);
  b.target.assign(b.size * b.target_frames * m, 0.0f);
  b.source_mask.assign(b.size * b.source_frames, 0);
  b.target_mask.assign(b.size * b.target_frames, 0);
  for (std::size_t e = 0; e < b.size; ++e) {
    const auto& ex = examples[indices[e]];
    std::copy(ex.source.values.begin(), ex.source.values.end(), b.source.begin() + static_cast<std::ptrdiff_t>(e * b.source_frames * m));
    std::copy(ex.target.values.begin(), ex.target.values.end(), b.target.begin() + static_cast<std::ptrdiff_t>(e * b.target_frames * m));
    std::fill_n(b.source_mask.begin() + static_cast<std::ptrdiff_t>(e * b.source_frames), ex.source.frames, 1);
    std::fill_n(b.target_mask.begin() + static_cast<std::ptrdiff_t>(e * b.target_frames), ex.target.frames, 1);
    b.source_lengths.push_back(ex.source.frames);
    b.target_lengths.push_back(ex.target.frames);
    b.source_styles.push_back(ex.source_style);
    b.target_styles.push_back(ex.target_style);
    b.content_ids.push_back(ex.content_id);
    b.example_indices.push_back(indices[e]);
  }
  return b;
}

BatchIterator::BatchIterator(std::span<const TransformExample> examples, std::size_t batch_size, std::uint64_t seed)
    : examples_(examples), batch_size_(batch_size), seed_(seed) {
  if (batch_size_ == 0) throw InvalidInput("batch_size must be at least 1");
  start_epoch(0);
}

void BatchIterator::start_epoch(std::size_t epoch) {
  order_.resize(examples_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::mt19937_64 rng(detail::splitmix64(seed_ ^ detail::splitmix64(epoch)));
  for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng() % i]);
  cursor_ = 0;
}

bool BatchIterator::next(PaddedBatch& out) {
  if (cursor_ >= order_.size()) return false;
  const std::size_t n = std::min(batch_size_, order_.size() - cursor_);
  out = make_batch(examples_, std::span<const std::size_t>(order_).subspan(cursor_, n));
  cursor_ += n;
  return true;
}

std::size_t BatchIterator::batches_per_epoch() const { return (examples_.size() + batch_size_ - 1) / batch_size_; }

}  // namespace audiomorph::data
