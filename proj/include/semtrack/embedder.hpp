#pragma once

#include "semtrack/image.hpp"
#include "semtrack/mot_io.hpp"
#include "semtrack/tensor.hpp"

namespace semtrack {

// Maps a frame to a C x H x W semantic feature map. Implementations must be
// deterministic and produce a fixed shape for a fixed configuration.
class FrameEmbedder {
 public:
  virtual ~FrameEmbedder() = default;
  virtual Tensor embed(const ImageBuffer& img) const = 0;
  virtual std::size_t channels() const = 0;
  virtual std::size_t grid_height() const = 0;
  virtual std::size_t grid_width() const = 0;
};

// Hand-crafted grid pooling. Channels per cell:
//   0-2   mean R, G, B
//   3-5   variance R, G, B
//   6-13  luminance gradient orientation histogram (magnitude weighted)
//   14-15 luminance mean and standard deviation
class DefaultEmbedder final : public FrameEmbedder {
 public:
  static constexpr std::size_t kChannels = 16;
  static constexpr std::size_t kGrid = 14;

  Tensor embed(const ImageBuffer& img) const override;
  std::size_t channels() const override { return kChannels; }
  std::size_t grid_height() const override { return kGrid; }
  std::size_t grid_width() const override { return kGrid; }
};

Tensor default_embedder(const ImageBuffer& img);

// Average of the feature vectors under `box`, weighted by the overlap area of
// the box with each grid cell. Returns a vector of length C.
std::vector<double> pool_box(const Tensor& features, const BoundingBox& box, int image_height, int image_width);

}  // namespace semtrack
