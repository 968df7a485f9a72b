#pragma once

#include <span>
#include <vector>

#include "posefuse/geometry.hpp"

namespace posefuse::eval {

/// Mean absolute error. Throws LengthMismatch and EmptyInput.
double mae(std::span<const double> preds, std::span<const double> gts);

/// Lower median: element (n - 1) / 2 of the sorted values. Throws EmptyInput.
double lower_median(std::vector<double> values);

double mean(std::span<const double> values);

struct PoseErrorStats {
  double median_et = 0.0;
  double mean_et = 0.0;
  double median_er = 0.0;
  double mean_er = 0.0;
};

/// Per-sample translation (m) and rotation (deg) errors.
struct PoseErrors {
  std::vector<double> et;
  std::vector<double> er;
};

PoseErrors pose_errors(std::span<const Pose> preds, std::span<const Pose> gts);
/// Throws LengthMismatch and EmptyInput.
PoseErrorStats pose_error_stats(std::span<const Pose> preds, std::span<const Pose> gts);

}  // namespace posefuse::eval
