#include "overlay.hpp"

#include <cmath>
#include <map>
#include <string>

namespace semtrack::cli {

namespace fs = std::filesystem;

namespace {

// 3x5 glyphs, one row per entry, bit 2 is the leftmost column.
constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigits{{
    {7, 5, 5, 5, 7},
    {2, 6, 2, 2, 7},
    {7, 1, 7, 4, 7},
    {7, 1, 7, 1, 7},
    {5, 5, 7, 1, 1},
    {7, 4, 7, 1, 7},
    {7, 4, 7, 5, 7},
    {7, 1, 1, 1, 1},
    {7, 5, 7, 5, 7},
    {7, 5, 7, 1, 7},
}};

constexpr int kGlyphScale = 2;

void put(ImageBuffer& img, int y, int x, const std::array<float, 3>& color) {
  if (y < 0 || x < 0 || y >= img.height() || x >= img.width()) return;
  for (int c = 0; c < 3; ++c) img.at(y, x, c) = color[static_cast<std::size_t>(c)];
}

void fill_rect(ImageBuffer& img, int y0, int x0, int y1, int x1, const std::array<float, 3>& color) {
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) put(img, y, x, color);
}

}  // namespace

double identity_hue(std::int64_t identity) {
  constexpr double kGoldenConjugate = 0.6180339887498949;
  const double v = static_cast<double>(identity) * kGoldenConjugate;
  return v - std::floor(v);
}

std::array<float, 3> identity_color(std::int64_t identity) {
  constexpr double s = 0.9, v = 0.95;
  const double h = identity_hue(identity) * 6.0;
  const int sector = static_cast<int>(std::floor(h)) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1.0 - s), q = v * (1.0 - s * f), t = v * (1.0 - s * (1.0 - f));
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
  return {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b)};
}

void draw_track(ImageBuffer& img, const BoundingBox& box, std::int64_t identity) {
  const auto color = identity_color(identity);
  const int x0 = static_cast<int>(std::lround(box.left));
  const int y0 = static_cast<int>(std::lround(box.top));
  const int x1 = static_cast<int>(std::lround(box.right()));
  const int y1 = static_cast<int>(std::lround(box.bottom()));
  fill_rect(img, y0, x0, y0 + 2, x1, color);
  fill_rect(img, y1 - 2, x0, y1, x1, color);
  fill_rect(img, y0, x0, y1, x0 + 2, color);
  fill_rect(img, y0, x1 - 2, y1, x1, color);

  const std::string label = std::to_string(identity);
  const int glyph_h = 5 * kGlyphScale, glyph_w = 3 * kGlyphScale;
  // Above the box when there is room, otherwise just inside its top edge.
  const int ty = y0 - glyph_h - 2 >= 0 ? y0 - glyph_h - 2 : y0 + 3;
  int tx = x0;
  for (char ch : label) {
    if (ch < '0' || ch > '9') continue;
    const auto& glyph = kDigits[static_cast<std::size_t>(ch - '0')];
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 3; ++c)
        if (glyph[static_cast<std::size_t>(r)] & (4 >> c))
          fill_rect(img, ty + r * kGlyphScale, tx + c * kGlyphScale, ty + (r + 1) * kGlyphScale,
                    tx + (c + 1) * kGlyphScale, color);
    tx += glyph_w + kGlyphScale;
  }
}

OverlayStats render_overlay(const fs::path& seq_dir, const fs::path& result_file, const fs::path& out_dir) {
  const auto seq = load_sequence(seq_dir);
  const auto records = read_mot_file(result_file);
  const auto by_frame = group_by_frame(records);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  OverlayStats stats;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto frame = static_cast<std::int64_t>(i + 1);
    const auto& src = seq.frames[i];
    const auto it = by_frame.find(frame);
    if (it == by_frame.end() || it->second.empty()) {
      fs::copy_file(src, out_dir / src.filename(), fs::copy_options::overwrite_existing, ec);
      if (ec) throw IoError("cannot copy " + src.string() + ": " + ec.message());
      ++stats.copied;
      continue;
    }
    auto img = read_image(src);
    for (const auto& r : it->second) draw_track(img, r.box, r.identity.value_or(0));
    auto name = src.filename();
    name.replace_extension(".png");
    write_png(out_dir / name, img);
    ++stats.annotated;
  }
  return stats;
}

}  // namespace semtrack::cli
