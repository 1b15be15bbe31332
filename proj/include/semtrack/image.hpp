#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "semtrack/error.hpp"

namespace semtrack {

// Interleaved RGB samples in [0, 1], row-major (y, x, channel).
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer() = default;
  ImageBuffer(int height, int width, float fill = 0.0f);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return samples_.empty(); }

  float& at(int y, int x, int c) { return samples_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return samples_[index(y, x, c)]; }

  std::span<float> samples() { return samples_; }
  std::span<const float> samples() const { return samples_; }

  void clamp();

  static ImageBuffer from_bytes(int height, int width, std::span<const std::uint8_t> rgb);
  // Rounds to nearest after clamping.
  std::vector<std::uint8_t> to_bytes() const;

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * kChannels +
           static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> samples_;
};

enum class ResampleFilter { Area, Bilinear, Bicubic };

const char* to_string(ResampleFilter f);
ResampleFilter resample_filter_from_string(std::string_view s);

// Reflect-101 index folding (…, 2, 1, 0, 1, 2, …); valid for any offset.
int reflect_index(int i, int n);

// Pixel-center aligned resize. Equal sizes return an exact copy.
ImageBuffer resample(const ImageBuffer& img, int out_height, int out_width, ResampleFilter filter);

// Per-channel 2-D correlation with a square odd-sized kernel, reflect-101
// borders. weights is size*size, row-major.
ImageBuffer convolve(const ImageBuffer& img, std::span<const double> weights, int size);

double psnr(const ImageBuffer& a, const ImageBuffer& b);

// Codecs -------------------------------------------------------------------

ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& img);
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);

// Baseline JPEG encode at `quality` (4:2:0, integer DCT) followed by decode.
ImageBuffer read_jpeg(const std::filesystem::path& path);
// Dispatches on the extension (.png, .jpg, .jpeg).
ImageBuffer read_image(const std::filesystem::path& path);

ImageBuffer jpeg_roundtrip(const ImageBuffer& img, int quality);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

}  // namespace semtrack
