#include "posefuse/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "posefuse/error.hpp"
#include "posefuse/util/rng.hpp"

namespace posefuse::data {

std::size_t train_count(std::size_t n) { return static_cast<std::size_t>(std::llround(0.75 * static_cast<double>(n))); }

DatasetSplit split_dataset(std::span<const PoseRecord> records, std::uint64_t seed) {
  if (records.size() < 4) {
    throw TooFewRecords("a 3:1 split needs at least 4 records, got " + std::to_string(records.size()));
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 21));
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  DatasetSplit split;
  split.seed = seed;
  const std::size_t n_train = train_count(records.size());
  split.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  for (std::size_t i : split.train_indices) split.train.push_back(records[i]);
  for (std::size_t i : split.test_indices) split.test.push_back(records[i]);
  return split;
}

}  // namespace posefuse::data
