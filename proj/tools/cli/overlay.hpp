#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "semtrack/image.hpp"
#include "semtrack/mot_io.hpp"

namespace semtrack::cli {

// Hue in [0, 1): fractional part of identity times the golden ratio conjugate.
double identity_hue(std::int64_t identity);
std::array<float, 3> identity_color(std::int64_t identity);

// Box outline (2 px) plus the identity number drawn above the box.
void draw_track(ImageBuffer& img, const BoundingBox& box, std::int64_t identity);

struct OverlayStats {
  std::size_t annotated = 0;
  std::size_t copied = 0;
};

// Frames without any box are copied byte-for-byte; annotated frames are
// written as PNG under the same stem.
OverlayStats render_overlay(const std::filesystem::path& seq_dir, const std::filesystem::path& result_file,
                            const std::filesystem::path& out_dir);

}  // namespace semtrack::cli
