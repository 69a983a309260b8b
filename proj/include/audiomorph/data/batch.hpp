#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "audiomorph/data/example.hpp"

namespace audiomorph::data {

/// Examples padded to the per-batch maximum lengths. Arrays are
/// example-major: source[(b * source_frames + t) * n_mels + m].
struct PaddedBatch {
  std::size_t size = 0;
  std::size_t n_mels = 0;
  std::size_t source_frames = 0;
  std::size_t target_frames = 0;
  std::vector<float> source;
  std::vector<float> target;
  std::vector<std::uint8_t> source_mask;  // [size, source_frames]
  std::vector<std::uint8_t> target_mask;  // [size, target_frames]
  std::vector<std::size_t> source_lengths;
  std::vector<std::size_t> target_lengths;
  std::vector<int> source_styles;
  std::vector<int> target_styles;
  std::vector<int> content_ids;
  std::vector<std::size_t> example_indices;
};

/// Pads the selected examples with zeros. `pad_*_to` forces a minimum
/// padded length (used to check that padding is inert).
PaddedBatch make_batch(std::span<const TransformExample> examples, std::span<const std::size_t> indices,
                       std::size_t pad_source_to = 0, std::size_t pad_target_to = 0);

/// Seeded per-epoch shuffling into fixed-size batches; the final partial
/// batch is kept. Single consumer.
class BatchIterator {
 public:
  BatchIterator(std::span<const TransformExample> examples, std::size_t batch_size, std::uint64_t seed);

  /// Restart at `epoch`; the order depends only on (seed, epoch).
  void start_epoch(std::size_t epoch);
  bool next(PaddedBatch& out);
  std::size_t batches_per_epoch() const;
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  std::span<const TransformExample> examples_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace audiomorph::data
