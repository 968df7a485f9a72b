#pragma once

#include <cstddef>
#include <functional>

namespace posefuse::eval {

struct MapstOptions {
  std::size_t batch_size = 10;
  /// At least 3; the slowest repetition is discarded.
  std::size_t repetitions = 3;
};

/// Processes samples [begin, end).
using BatchFn = std::function<void(std::size_t begin, std::size_t end)>;

/// Mean per-sample processing time in seconds. Each repetition times every
/// full batch of `batch_size` samples (a trailing partial batch is skipped)
/// and divides by the samples processed; the slowest repetition is dropped
/// and the rest averaged. Throws InsufficientSamples when fewer than one
/// batch is available.
double measure_mapst(std::size_t samples, const BatchFn& process, const MapstOptions& options = {});

}  // namespace posefuse::eval
