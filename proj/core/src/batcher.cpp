#include "signembed/batcher.hpp"

#include <algorithm>

namespace signembed {

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n,
                                                       std::size_t batch_size,
                                                       RandomSource& rng) {
  if (batch_size < 2) throw ValidationError("batch_size must be >= 2");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start + 2 <= n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    if (end - start < 2) break;
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

DistinctLabelBatcher::DistinctLabelBatcher(const std::vector<std::string>& labels,
                                           std::size_t batch_size)
    : batch_size_(batch_size), total_(labels.size()) {
  if (batch_size < 2) throw ValidationError("batch_size must be >= 2");
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty())
      throw ValidationError("distinct-label batching requires a label on every example");
    by_label[labels[i]].push_back(i);
  }
  if (by_label.size() < batch_size)
    throw ValidationError(
        "only " + std::to_string(by_label.size()) + " distinct labels for batch size " +
        std::to_string(batch_size) + "; lower the batch size to at most the label count");
  for (auto& [label, idx] : by_label) {
    groups_.push_back(std::move(idx));
    cursor_.push_back(0);
  }
}

std::size_t DistinctLabelBatcher::batches_per_epoch() const {
  return (total_ + batch_size_ - 1) / batch_size_;
}

std::vector<std::size_t> DistinctLabelBatcher::next(RandomSource& rng) {
  // partial Fisher-Yates over label slots: a uniform batch_size-subset
  std::vector<std::size_t> slots(groups_.size());
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
  std::vector<std::size_t> batch;
  batch.reserve(batch_size_);
  for (std::size_t pick = 0; pick < batch_size_; ++pick) {
    const std::size_t j =
        pick + static_cast<std::size_t>(rng.uniform_int(slots.size() - pick));
    std::swap(slots[pick], slots[j]);
    const std::size_t label = slots[pick];
    auto& group = groups_[label];
    auto& cur = cursor_[label];
    if (cur == 0) rng.shuffle(group);  // fresh pass through this label's pool
    batch.push_back(group[cur]);
    cur = (cur + 1) % group.size();
  }
  return batch;
}

}  // namespace signembed
