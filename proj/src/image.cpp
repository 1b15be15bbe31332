#include "semtrack/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace semtrack {

ImageBuffer::ImageBuffer(int height, int width, float fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw ValidationError("image dimensions must be positive");
  samples_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * kChannels, fill);
}

void ImageBuffer::clamp() {
  for (auto& v : samples_) v = std::clamp(v, 0.0f, 1.0f);
}

ImageBuffer ImageBuffer::from_bytes(int height, int width, std::span<const std::uint8_t> rgb) {
  ImageBuffer img(height, width);
  if (rgb.size() != img.samples_.size()) throw ValidationError("RGB byte count does not match dimensions");
  for (std::size_t i = 0; i < rgb.size(); ++i) img.samples_[i] = static_cast<float>(rgb[i]) / 255.0f;
  return img;
}

std::vector<std::uint8_t> ImageBuffer::to_bytes() const {
  std::vector<std::uint8_t> out(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const float v = std::clamp(samples_[i], 0.0f, 1.0f);
    out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return out;
}

const char* to_string(ResampleFilter f) {
  switch (f) {
    case ResampleFilter::Area: return "area";
    case ResampleFilter::Bilinear: return "bilinear";
    case ResampleFilter::Bicubic: return "bicubic";
  }
  return "?";
}

ResampleFilter resample_filter_from_string(std::string_view s) {
  if (s == "area") return ResampleFilter::Area;
  if (s == "bilinear") return ResampleFilter::Bilinear;
  if (s == "bicubic") return ResampleFilter::Bicubic;
  throw ValidationError("unknown resample filter '" + std::string(s) + "'");
}

int reflect_index(int i, int n) {
  if (n <= 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

namespace {

struct Tap {
  int src;
  double weight;
};

// One row of taps per output coordinate.
using TapTable = std::vector<std::vector<Tap>>;

double cubic_weight(double t) {
  constexpr double A = -0.75;
  t = std::fabs(t);
  if (t <= 1.0) return ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A;
  return 0.0;
}

TapTable make_taps(int in, int out, ResampleFilter filter) {
  TapTable table(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (int d = 0; d < out; ++d) {
    auto& taps = table[static_cast<std::size_t>(d)];
    switch (filter) {
      case ResampleFilter::Area: {
        const double lo = d * scale;
        const double hi = (d + 1) * scale;
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(in - 1, static_cast<int>(std::ceil(hi)) - 1);
        for (int s = first; s <= last; ++s) {
          const double overlap = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
          if (overlap > 0.0) taps.push_back({s, overlap / scale});
        }
        break;
      }
      case ResampleFilter::Bilinear: {
        const double src = std::clamp((d + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
        const int s0 = static_cast<int>(std::floor(src));
        const int s1 = std::min(s0 + 1, in - 1);
        const double t = src - s0;
        taps.push_back({s0, 1.0 - t});
        if (t > 0.0) taps.push_back({s1, t});
        break;
      }
      case ResampleFilter::Bicubic: {
        const double src = (d + 0.5) * scale - 0.5;
        const int base = static_cast<int>(std::floor(src));
        const double t = src - base;
        for (int k = -1; k <= 2; ++k) {
          const double w = cubic_weight(t - k);
          if (w != 0.0) taps.push_back({std::clamp(base + k, 0, in - 1), w});
        }
        break;
      }
    }
  }
  return table;
}

}  // namespace

ImageBuffer resample(const ImageBuffer& img, int out_height, int out_width, ResampleFilter filter) {
  if (out_height < 1 || out_width < 1) {
    throw ValidationError("resample target " + std::to_string(out_height) + "x" +
                          std::to_string(out_width) + " is degenerate");
  }
  if (out_height == img.height() && out_width == img.width()) return img;

  const auto col_taps = make_taps(img.width(), out_width, filter);
  const auto row_taps = make_taps(img.height(), out_height, filter);
  constexpr int C = ImageBuffer::kChannels;

  // Horizontal pass into a double-precision intermediate.
  std::vector<double> mid(static_cast<std::size_t>(img.height()) * static_cast<std::size_t>(out_width) * C, 0.0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < out_width; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (const auto& tap : col_taps[static_cast<std::size_t>(x)]) acc += tap.weight * img.at(y, tap.src, c);
        mid[(static_cast<std::size_t>(y) * static_cast<std::size_t>(out_width) + static_cast<std::size_t>(x)) * C + static_cast<std::size_t>(c)] = acc;
      }
    }
  }
  ImageBuffer out(out_height, out_width);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (const auto& tap : row_taps[static_cast<std::size_t>(y)]) {
          acc += tap.weight * mid[(static_cast<std::size_t>(tap.src) * static_cast<std::size_t>(out_width) + static_cast<std::size_t>(x)) * C + static_cast<std::size_t>(c)];
        }
        out.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

ImageBuffer convolve(const ImageBuffer& img, std::span<const double> weights, int size) {
  if (size < 1 || size % 2 == 0 || weights.size() != static_cast<std::size_t>(size) * static_cast<std::size_t>(size)) {
    throw ValidationError("convolution kernel must be square and odd-sized");
  }
  const int r = size / 2;
  ImageBuffer out(img.height(), img.width());
  std::vector<int> xs(static_cast<std::size_t>(size));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int k = 0; k < size; ++k) xs[static_cast<std::size_t>(k)] = reflect_index(x + k - r, img.width());
      double acc[ImageBuffer::kChannels] = {0.0, 0.0, 0.0};
      for (int ky = 0; ky < size; ++ky) {
        const int sy = reflect_index(y + ky - r, img.height());
        for (int kx = 0; kx < size; ++kx) {
          const double w = weights[static_cast<std::size_t>(ky * size + kx)];
          const int sx = xs[static_cast<std::size_t>(kx)];
          for (int c = 0; c < ImageBuffer::kChannels; ++c) acc[c] += w * img.at(sy, sx, c);
        }
      }
      for (int c = 0; c < ImageBuffer::kChannels; ++c) out.at(y, x, c) = static_cast<float>(acc[c]);
    }
  }
  return out;
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.height() != b.height() || a.width() != b.width()) throw ValidationError("psnr: size mismatch");
  const auto qa = a.to_bytes();
  const auto qb = b.to_bytes();
  double mse = 0.0;
  for (std::size_t i = 0; i < qa.size(); ++i) {
    const double d = static_cast<double>(qa[i]) - static_cast<double>(qb[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(qa.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace semtrack
