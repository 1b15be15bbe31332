#include "semtrack/embedder.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace semtrack {

namespace {

// Cells covered by pixel i of n when n pixels are split into g cells by pixel
// centre. A centre lying exactly on a cell border is shared half and half.
struct CellShare {
  std::size_t first = 0;
  std::size_t second = 0;
  double first_weight = 1.0;
};

std::vector<CellShare> cell_shares(int n, std::size_t g) {
  std::vector<CellShare> out(static_cast<std::size_t>(n));
  const auto nn = static_cast<std::uint64_t>(n);
  for (std::uint64_t i = 0; i < nn; ++i) {
    // Centre position in cell units is (2i+1)*g / (2n); integer arithmetic
    // keeps the border test exact.
    const std::uint64_t num = (2 * i + 1) * g;
    const std::uint64_t den = 2 * nn;
    const auto cell = static_cast<std::size_t>(num / den);
    auto& s = out[i];
    if (num % den == 0 && cell > 0) {
      s.first = cell - 1;
      s.second = std::min<std::size_t>(cell, g - 1);
      s.first_weight = 0.5;
    } else {
      s.first = s.second = std::min<std::size_t>(cell, g - 1);
    }
  }
  return out;
}

double luminance(const ImageBuffer& img, int y, int x) {
  return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
}

struct CellAccumulator {
  double weight = 0.0;
  std::array<double, 3> reference{};
  bool has_reference = false;
  double ref_luma = 0.0;
  std::array<double, 3> sum{};
  std::array<double, 3> sum_sq{};
  std::array<double, 8> hist{};
  double luma_sum = 0.0;
  double luma_sq = 0.0;
};

}  // namespace

Tensor DefaultEmbedder::embed(const ImageBuffer& img) const {
  const int h = img.height(), w = img.width();
  if (h < static_cast<int>(kGrid) || w < static_cast<int>(kGrid)) {
    throw ValidationError("embedder needs images of at least 14x14 pixels");
  }
  const auto rows = cell_shares(h, kGrid);
  const auto cols = cell_shares(w, kGrid);

  std::vector<double> luma(static_cast<std::size_t>(h) * static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) luma[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = luminance(img, y, x);
  auto L = [&](int y, int x) {
    return luma[static_cast<std::size_t>(reflect_index(y, h)) * static_cast<std::size_t>(w) +
                static_cast<std::size_t>(reflect_index(x, w))];
  };

  std::vector<CellAccumulator> cells(kGrid * kGrid);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int y = 0; y < h; ++y) {
    const auto& ry = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < w; ++x) {
      const auto& cx = cols[static_cast<std::size_t>(x)];
      const double gx = 0.5 * (L(y, x + 1) - L(y, x - 1));
      const double gy = 0.5 * (L(y + 1, x) - L(y - 1, x));
      const double mag = std::hypot(gx, gy);
      std::size_t bin = 0;
      if (mag > 0.0) {
        double angle = std::atan2(gy, gx);
        if (angle < 0.0) angle += kTwoPi;
        bin = std::min<std::size_t>(7, static_cast<std::size_t>(angle / (kTwoPi / 8.0)));
      }
      const double lum = L(y, x);
      const std::array<std::pair<std::size_t, double>, 2> ys{{{ry.first, ry.first_weight}, {ry.second, 1.0 - ry.first_weight}}};
      const std::array<std::pair<std::size_t, double>, 2> xs{{{cx.first, cx.first_weight}, {cx.second, 1.0 - cx.first_weight}}};
      for (const auto& [cyi, wy] : ys) {
        if (wy == 0.0) continue;
        for (const auto& [cxi, wx] : xs) {
          if (wx == 0.0) continue;
          const double wgt = wy * wx;
          auto& acc = cells[cyi * kGrid + cxi];
          if (!acc.has_reference) {
            for (int c = 0; c < 3; ++c) acc.reference[static_cast<std::size_t>(c)] = img.at(y, x, c);
            acc.ref_luma = lum;
            acc.has_reference = true;
          }
          acc.weight += wgt;
          for (int c = 0; c < 3; ++c) {
            const auto cu = static_cast<std::size_t>(c);
            const double d = img.at(y, x, c) - acc.reference[cu];
            acc.sum[cu] += wgt * d;
            acc.sum_sq[cu] += wgt * d * d;
          }
          const double dl = lum - acc.ref_luma;
          acc.luma_sum += wgt * dl;
          acc.luma_sq += wgt * dl * dl;
          acc.hist[bin] += wgt * mag;
        }
      }
    }
  }

  Tensor out({kChannels, kGrid, kGrid});
  for (std::size_t cy = 0; cy < kGrid; ++cy) {
    for (std::size_t cx = 0; cx < kGrid; ++cx) {
      const auto& acc = cells[cy * kGrid + cx];
      const double wsum = acc.weight;
      // Moments are relative to the first pixel seen in the cell.
      for (std::size_t c = 0; c < 3; ++c) {
        const double m = acc.sum[c] / wsum;
        out.at(c, cy, cx) = acc.reference[c] + m;
        out.at(3 + c, cy, cx) = std::max(0.0, acc.sum_sq[c] / wsum - m * m);
      }
      for (std::size_t b = 0; b < 8; ++b) out.at(6 + b, cy, cx) = acc.hist[b] / wsum;
      const double lm = acc.luma_sum / wsum;
      out.at(14, cy, cx) = acc.ref_luma + lm;
      out.at(15, cy, cx) = std::sqrt(std::max(0.0, acc.luma_sq / wsum - lm * lm));
    }
  }
  return out;
}

Tensor default_embedder(const ImageBuffer& img) { return DefaultEmbedder{}.embed(img); }

std::vector<double> pool_box(const Tensor& features, const BoundingBox& box, int image_height, int image_width) {
  require_rank(features, 3, "feature map");
  const auto C = features.extent(0), gh = features.extent(1), gw = features.extent(2);
  const double sy = static_cast<double>(gh) / image_height;
  const double sx = static_cast<double>(gw) / image_width;
  const double y0 = std::clamp(box.top * sy, 0.0, static_cast<double>(gh));
  const double y1 = std::clamp(box.bottom() * sy, 0.0, static_cast<double>(gh));
  const double x0 = std::clamp(box.left * sx, 0.0, static_cast<double>(gw));
  const double x1 = std::clamp(box.right() * sx, 0.0, static_cast<double>(gw));

  std::vector<double> out(C, 0.0);
  double total = 0.0;
  for (std::size_t cy = 0; cy < gh; ++cy) {
    const double oy = std::min(y1, static_cast<double>(cy + 1)) - std::max(y0, static_cast<double>(cy));
    if (oy <= 0.0) continue;
    for (std::size_t cx = 0; cx < gw; ++cx) {
      const double ox = std::min(x1, static_cast<double>(cx + 1)) - std::max(x0, static_cast<double>(cx));
      if (ox <= 0.0) continue;
      const double a = oy * ox;
      total += a;
      for (std::size_t c = 0; c < C; ++c) out[c] += a * features.at(c, cy, cx);
    }
  }
  if (total > 0.0) {
    for (auto& v : out) v /= total;
    return out;
  }
  // Box entirely outside the image: use the cell nearest to its centre.
  const double cyf = (box.top + 0.5 * box.height) * sy;
  const double cxf = (box.left + 0.5 * box.width) * sx;
  const auto cy = static_cast<std::size_t>(std::clamp(std::floor(cyf), 0.0, static_cast<double>(gh - 1)));
  const auto cx = static_cast<std::size_t>(std::clamp(std::floor(cxf), 0.0, static_cast<double>(gw - 1)));
  for (std::size_t c = 0; c < C; ++c) out[c] = features.at(c, cy, cx);
  return out;
}

}  // namespace semtrack
