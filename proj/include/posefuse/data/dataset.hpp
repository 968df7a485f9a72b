#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "posefuse/data/image.hpp"
#include "posefuse/data/normalization.hpp"
#include "posefuse/data/pose_file.hpp"
#include "posefuse/nn/model.hpp"
#include "posefuse/nn/train.hpp"

namespace posefuse::data {

/// A pose file plus the images it references. Image refs resolve relative to
/// the pose file's directory. Decoded images are cached, so every file is
/// read from disk at most once.
class PoseDataset {
 public:
  /// `path` is a dataset directory (containing poses.txt) or a pose file.
  /// Throws IoError when neither exists.
  static PoseDataset open(const std::filesystem::path& path);
  /// In-memory dataset, e.g. straight from the synthetic generator.
  static PoseDataset from_memory(std::vector<PoseRecord> records, std::vector<RawImage> images);

  std::size_t size() const { return records_.size(); }
  const std::vector<PoseRecord>& records() const { return records_; }
  const PoseRecord& record(std::size_t i) const { return records_.at(i); }
  std::filesystem::path image_path(std::size_t i) const;
  const std::filesystem::path& root() const { return root_; }

  /// Throws MissingImage / UnsupportedImage.
  const RawImage& image(std::size_t i) const;

 private:
  PoseDataset() = default;

  std::filesystem::path root_;
  std::vector<PoseRecord> records_;
  struct Cache {
    std::mutex mutex;
    std::map<std::size_t, std::unique_ptr<RawImage>> images;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// Which dataset indices each pipeline stage consumed.
class AccessAudit {
 public:
  void record(const std::string& stage, std::size_t index);
  std::set<std::size_t> indices(const std::string& stage) const;
  std::vector<std::string> stages() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::set<std::size_t>> seen_;
};

/// Serves preprocessed images and network-space targets for a subset of a
/// dataset. Inputs are standardized with `norm.image_*`; translation
/// targets use `norm.translation_*`.
class ImageSamples final : public nn::SampleSource {
 public:
  ImageSamples(const PoseDataset& dataset, std::vector<std::size_t> indices, nn::DataNormalization norm,
               RotationSettings rotation = {}, PreprocessConfig preprocess = {}, AccessAudit* audit = nullptr,
               std::string stage = {});

  std::size_t size() const override { return indices_.size(); }
  nn::Tensor input(std::size_t i) const override;
  std::array<double, nn::kPoseDim> target(std::size_t i) const override;

  std::size_t dataset_index(std::size_t i) const { return indices_.at(i); }
  const std::vector<std::size_t>& indices() const { return indices_; }

 private:
  const PoseDataset* dataset_;
  std::vector<std::size_t> indices_;
  nn::DataNormalization norm_;
  RotationSettings rotation_;
  PreprocessConfig preprocess_;
  AccessAudit* audit_;
  std::string stage_;
};

/// Per-channel image statistics over the given dataset indices.
ImageStats compute_image_stats(const PoseDataset& dataset, const std::vector<std::size_t>& indices,
                               const PreprocessConfig& preprocess = {}, AccessAudit* audit = nullptr,
                               const std::string& stage = {});

/// Image and translation statistics of a training subset, in the form a
/// model carries.
nn::DataNormalization fit_normalization(const PoseDataset& dataset, const std::vector<std::size_t>& train_indices,
                                        const PreprocessConfig& preprocess = {}, AccessAudit* audit = nullptr,
                                        const std::string& stage = "normalization");

}  // namespace posefuse::data
