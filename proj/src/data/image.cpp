#include "posefuse/data/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <png.h>

#include "posefuse/error.hpp"

namespace posefuse::data {

RawImage read_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingImage("image not found: " + path.string());

  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw UnsupportedImage("cannot decode " + path.string() + ": " + img.message);
  }
  const bool gray = (img.format & PNG_FORMAT_FLAG_COLOR) == 0;
  img.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

  RawImage out;
  out.width = img.width;
  out.height = img.height;
  out.channels = gray ? 1 : 3;
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string message = img.message;
    png_image_free(&img);
    throw UnsupportedImage("cannot decode " + path.string() + ": " + message);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RawImage& image) {
  if (image.channels != 1 && image.channels != 3) throw UnsupportedImage("PNG writer takes 1 or 3 channels");
  if (image.pixels.size() != image.width * image.height * image.channels) {
    throw UnsupportedImage("pixel buffer does not match image dimensions");
  }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + img.message);
  }
}

nn::Tensor to_planar(const RawImage& image) {
  if (image.width == 0 || image.height == 0) throw UnsupportedImage("image has no pixels");
  if (image.channels != 1 && image.channels != 3) {
    throw UnsupportedImage("expected 1 or 3 channels, got " + std::to_string(image.channels));
  }
  const std::size_t plane = image.width * image.height;
  nn::Tensor out({3, image.height, image.width});
  for (std::size_t c = 0; c < 3; ++c) {
    const std::size_t src = image.channels == 1 ? 0 : c;
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = image.pixels[i * image.channels + src];
  }
  return out;
}

nn::Tensor resize_bilinear(const nn::Tensor& chw, std::size_t out_height, std::size_t out_width) {
  if (chw.rank() != 3) throw ShapeMismatch("resize expects (C, H, W), got " + nn::shape_string(chw.shape()));
  const std::size_t channels = chw.dim(0), in_h = chw.dim(1), in_w = chw.dim(2);

  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t i = 0; i < out; ++i) {
      double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      t[i] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
    }
    return t;
  };
  const std::vector<Tap> ty = taps(in_h, out_height), tx = taps(in_w, out_width);

  nn::Tensor out({channels, out_height, out_width});
  for (std::size_t c = 0; c < channels; ++c) {
    const double* src = chw.data() + c * in_h * in_w;
    double* dst = out.data() + c * out_height * out_width;
    for (std::size_t y = 0; y < out_height; ++y) {
      const double* r0 = src + ty[y].lo * in_w;
      const double* r1 = src + ty[y].hi * in_w;
      const double fy = ty[y].frac;
      for (std::size_t x = 0; x < out_width; ++x) {
        const Tap& h = tx[x];
        const double top = r0[h.lo] + (r0[h.hi] - r0[h.lo]) * h.frac;
        const double bottom = r1[h.lo] + (r1[h.hi] - r1[h.lo]) * h.frac;
        dst[y * out_width + x] = top + (bottom - top) * fy;
      }
    }
  }
  return out;
}

nn::Tensor center_crop(const nn::Tensor& chw, std::size_t size) {
  if (chw.rank() != 3) throw ShapeMismatch("crop expects (C, H, W), got " + nn::shape_string(chw.shape()));
  const std::size_t channels = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
  if (size > h || size > w) throw UnsupportedImage("crop larger than image");
  const std::size_t top = (h - size) / 2, left = (w - size) / 2;
  nn::Tensor out({channels, size, size});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < size; ++y) {
      const double* src = chw.data() + (c * h + top + y) * w + left;
      std::copy(src, src + size, out.data() + (c * size + y) * size);
    }
  }
  return out;
}

nn::Tensor preprocess_unstandardized(const RawImage& image, const PreprocessConfig& config) {
  if (config.crop > config.resize) throw UnsupportedImage("crop size exceeds resize target");
  nn::Tensor planar = to_planar(image);
  if (planar.dim(1) != config.resize || planar.dim(2) != config.resize) {
    planar = resize_bilinear(planar, config.resize, config.resize);
  }
  nn::Tensor out = center_crop(planar, config.crop);
  for (double& v : out.values()) v /= 255.0;
  return out;
}

nn::Tensor preprocess_image(const RawImage& image, const ImageStats& stats, const PreprocessConfig& config) {
  nn::Tensor out = preprocess_unstandardized(image, config);
  const std::size_t plane = out.dim(1) * out.dim(2);
  for (std::size_t c = 0; c < 3; ++c) {
    const double scale = stats.std[c] < 1e-12 ? 1.0 : 1.0 / stats.std[c];
    double* p = out.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - stats.mean[c]) * scale;
  }
  return out;
}

void ImageStatsAccumulator::add(const nn::Tensor& chw01) {
  if (chw01.rank() != 3 || chw01.dim(0) != 3) {
    throw ShapeMismatch("image statistics expect (3, H, W), got " + nn::shape_string(chw01.shape()));
  }
  const std::size_t plane = chw01.dim(1) * chw01.dim(2);
  for (std::size_t c = 0; c < 3; ++c) {
    const double* p = chw01.data() + c * plane;
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < plane; ++i) {
      s += p[i];
      s2 += p[i] * p[i];
    }
    sum_[c] += s;
    sum_sq_[c] += s2;
    n_[c] += plane;
  }
  ++images_;
}

ImageStats ImageStatsAccumulator::finish() const {
  if (images_ == 0) throw EmptyDataset("image statistics need at least one image");
  ImageStats stats;
  for (std::size_t c = 0; c < 3; ++c) {
    const double n = static_cast<double>(n_[c]);
    stats.mean[c] = sum_[c] / n;
    stats.std[c] = std::sqrt(std::max(0.0, sum_sq_[c] / n - stats.mean[c] * stats.mean[c]));
  }
  return stats;
}

}  // namespace posefuse::data
