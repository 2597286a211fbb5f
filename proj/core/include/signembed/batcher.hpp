#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "signembed/common.hpp"

namespace signembed {

// Seeded shuffle chunked into batches of `batch_size`; a trailing batch of
// fewer than 2 examples is dropped (a contrastive batch needs a negative).
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n,
                                                       std::size_t batch_size,
                                                       RandomSource& rng);

// Batches whose members carry pairwise-distinct labels, so in-batch
// negatives are true negatives. Labels are drawn uniformly per batch;
// within a label, examples cycle through seeded shuffles.
class DistinctLabelBatcher {
 public:
  DistinctLabelBatcher(const std::vector<std::string>& labels, std::size_t batch_size);

  std::vector<std::size_t> next(RandomSource& rng);
  std::size_t batches_per_epoch() const;
  std::size_t num_labels() const { return groups_.size(); }

 private:
  std::size_t batch_size_;
  std::size_t total_;
  std::vector<std::vector<std::size_t>> groups_;  // example indices per label
  std::vector<std::size_t> cursor_;               // next position per label
};

}  // namespace signembed
