#include "posefuse/eval/timing.hpp"

#include <algorithm>
#include <chrono>
#include <vector>

#include "posefuse/error.hpp"

namespace posefuse::eval {

double measure_mapst(std::size_t samples, const BatchFn& process, const MapstOptions& options) {
  if (options.batch_size == 0) throw Error("MAPST batch size must be positive");
  if (samples < options.batch_size) {
    throw InsufficientSamples("MAPST needs at least " + std::to_string(options.batch_size) + " samples, got " +
                              std::to_string(samples));
  }
  const std::size_t reps = std::max<std::size_t>(3, options.repetitions);
  const std::size_t batches = samples / options.batch_size;
  const double processed = static_cast<double>(batches * options.batch_size);

  std::vector<double> per_sample;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t b = 0; b < batches; ++b) process(b * options.batch_size, (b + 1) * options.batch_size);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    per_sample.push_back(elapsed.count() / processed);
  }
  per_sample.erase(std::max_element(per_sample.begin(), per_sample.end()));
  double sum = 0.0;
  for (double v : per_sample) sum += v;
  return sum / static_cast<double>(per_sample.size());
}

}  // namespace posefuse::eval
