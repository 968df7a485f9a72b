#include "posefuse/data/dataset.hpp"

#include "posefuse/error.hpp"

namespace posefuse::data {

PoseDataset PoseDataset::open(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  fs::path pose_file = path;
  if (fs::is_directory(path)) pose_file = path / "poses.txt";
  if (!fs::exists(pose_file)) throw IoError("dataset not found: " + path.string());
  PoseDataset ds;
  ds.root_ = pose_file.parent_path();
  ds.records_ = load_pose_file(pose_file);
  return ds;
}

PoseDataset PoseDataset::from_memory(std::vector<PoseRecord> records, std::vector<RawImage> images) {
  if (records.size() != images.size()) throw LengthMismatch("records and images differ in count");
  PoseDataset ds;
  ds.records_ = std::move(records);
  for (std::size_t i = 0; i < images.size(); ++i) {
    ds.cache_->images[i] = std::make_unique<RawImage>(std::move(images[i]));
  }
  return ds;
}

std::filesystem::path PoseDataset::image_path(std::size_t i) const { return root_ / records_.at(i).image_ref; }

const RawImage& PoseDataset::image(std::size_t i) const {
  std::lock_guard lock(cache_->mutex);
  auto& slot = cache_->images[i];
  if (!slot) slot = std::make_unique<RawImage>(read_png(image_path(i)));
  return *slot;
}

void AccessAudit::record(const std::string& stage, std::size_t index) {
  std::lock_guard lock(mutex_);
  seen_[stage].insert(index);
}

std::set<std::size_t> AccessAudit::indices(const std::string& stage) const {
  std::lock_guard lock(mutex_);
  const auto it = seen_.find(stage);
  return it == seen_.end() ? std::set<std::size_t>{} : it->second;
}

std::vector<std::string> AccessAudit::stages() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [stage, _] : seen_) out.push_back(stage);
  return out;
}

ImageSamples::ImageSamples(const PoseDataset& dataset, std::vector<std::size_t> indices, nn::DataNormalization norm,
                           RotationSettings rotation, PreprocessConfig preprocess, AccessAudit* audit,
                           std::string stage)
    : dataset_(&dataset),
      indices_(std::move(indices)),
      norm_(norm),
      rotation_(rotation),
      preprocess_(preprocess),
      audit_(audit),
      stage_(std::move(stage)) {
  for (std::size_t i : indices_) {
    if (i >= dataset.size()) throw Error("sample index " + std::to_string(i) + " outside dataset");
  }
}

nn::Tensor ImageSamples::input(std::size_t i) const {
  const std::size_t index = indices_.at(i);
  if (audit_) audit_->record(stage_, index);
  return preprocess_image(dataset_->image(index), {norm_.image_mean, norm_.image_std}, preprocess_);
}

std::array<double, nn::kPoseDim> ImageSamples::target(std::size_t i) const {
  const PoseRecord& r = dataset_->record(indices_.at(i));
  NormalizationStats stats;
  stats.mean = norm_.translation_mean;
  stats.std = norm_.translation_std;
  return to_target(normalize_pose(r, stats, rotation_));
}

ImageStats compute_image_stats(const PoseDataset& dataset, const std::vector<std::size_t>& indices,
                               const PreprocessConfig& preprocess, AccessAudit* audit, const std::string& stage) {
  ImageStatsAccumulator acc;
  for (std::size_t i : indices) {
    if (audit) audit->record(stage, i);
    acc.add(preprocess_unstandardized(dataset.image(i), preprocess));
  }
  return acc.finish();
}

nn::DataNormalization fit_normalization(const PoseDataset& dataset, const std::vector<std::size_t>& train_indices,
                                        const PreprocessConfig& preprocess, AccessAudit* audit,
                                        const std::string& stage) {
  std::vector<PoseRecord> train;
  for (std::size_t i : train_indices) train.push_back(dataset.record(i));
  nn::DataNormalization norm;
  store_translation_stats(compute_normalization(train), norm);
  const ImageStats img = compute_image_stats(dataset, train_indices, preprocess, audit, stage);
  norm.image_mean = img.mean;
  norm.image_std = img.std;
  return norm;
}

}  // namespace posefuse::data
