#include "posefuse/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "posefuse/error.hpp"

namespace posefuse::eval {

double mae(std::span<const double> preds, std::span<const double> gts) {
  if (preds.size() != gts.size()) throw LengthMismatch("mae: inputs differ in length");
  if (preds.empty()) throw EmptyInput("mae: no samples");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += std::abs(preds[i] - gts[i]);
  return sum / static_cast<double>(preds.size());
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw EmptyInput("median of no values");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("mean of no values");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

PoseErrors pose_errors(std::span<const Pose> preds, std::span<const Pose> gts) {
  if (preds.size() != gts.size()) {
    throw LengthMismatch("pose errors: " + std::to_string(preds.size()) + " predictions vs " +
                         std::to_string(gts.size()) + " ground-truth poses");
  }
  PoseErrors out;
  out.et.reserve(preds.size());
  out.er.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out.et.push_back(translation_error_m(preds[i].t, gts[i].t));
    out.er.push_back(rotation_error_deg(preds[i].q, gts[i].q));
  }
  return out;
}

PoseErrorStats pose_error_stats(std::span<const Pose> preds, std::span<const Pose> gts) {
  const PoseErrors e = pose_errors(preds, gts);
  if (e.et.empty()) throw EmptyInput("pose error statistics need at least one sample");
  return {lower_median(e.et), mean(e.et), lower_median(e.er), mean(e.er)};
}

}  // namespace posefuse::eval
