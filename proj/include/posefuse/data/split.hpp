#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "posefuse/data/pose_file.hpp"

namespace posefuse::data {

/// Disjoint train/test partition. The index lists refer to positions in the
/// record list that was split, in shuffled order.
struct DatasetSplit {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::vector<PoseRecord> train;
  std::vector<PoseRecord> test;
  std::uint64_t seed = 0;
};

/// Number of training records for n records: llround(0.75 * n).
std::size_t train_count(std::size_t n);

/// Seeded shuffle, then a 3:1 partition. Throws TooFewRecords below 4
/// records.
DatasetSplit split_dataset(std::span<const PoseRecord> records, std::uint64_t seed);

}  // namespace posefuse::data
