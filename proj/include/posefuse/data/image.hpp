#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "posefuse/nn/tensor.hpp"

namespace posefuse::data {

/// 8-bit interleaved pixels, row-major, 1 (gray) or 3 (RGB) channels.
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
};

/// Decodes gray or RGB; palette and 16-bit files are converted, alpha is
/// dropped. Throws MissingImage when the file is absent and UnsupportedImage
/// when it cannot be decoded.
RawImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RawImage& image);

struct PreprocessConfig {
  std::size_t resize = 260;
  std::size_t crop = 250;
};

/// Per-channel statistics of preprocessed pixels in [0, 1].
struct ImageStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};
};

/// Channels-first copy in [0, 255]; gray input is replicated to 3 channels.
/// Throws UnsupportedImage for empty images or channel counts other than
/// 1 and 3.
nn::Tensor to_planar(const RawImage& image);

/// Bilinear resampling of a (C, H, W) tensor with half-pixel centers:
/// output pixel i samples source coordinate (i + 0.5) * in / out - 0.5,
/// clamped to the border.
nn::Tensor resize_bilinear(const nn::Tensor& chw, std::size_t out_height, std::size_t out_width);

/// Central size x size window; odd margins put the extra pixel at the end.
nn::Tensor center_crop(const nn::Tensor& chw, std::size_t size);

/// Resize, crop and scale to [0, 1]: the tensor image statistics are
/// computed from.
nn::Tensor preprocess_unstandardized(const RawImage& image, const PreprocessConfig& config = {});

/// Full preprocessing: preprocess_unstandardized followed by per-channel
/// (x - mean) / std. Channels whose std is below 1e-12 are only centered.
nn::Tensor preprocess_image(const RawImage& image, const ImageStats& stats, const PreprocessConfig& config = {});

/// Streaming per-channel mean and population std over preprocessed images.
class ImageStatsAccumulator {
 public:
  void add(const nn::Tensor& chw01);
  std::size_t count() const { return images_; }
  /// Throws EmptyDataset when nothing was added.
  ImageStats finish() const;

 private:
  std::size_t images_ = 0;
  std::array<double, 3> sum_{0, 0, 0};
  std::array<double, 3> sum_sq_{0, 0, 0};
  std::array<std::size_t, 3> n_{0, 0, 0};
};

}  // namespace posefuse::data
