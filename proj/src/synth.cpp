#include "semtrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "semtrack/rng.hpp"

namespace semtrack {

namespace fs = std::filesystem;

namespace {

using Color = std::array<float, 3>;

constexpr std::array<Color, 6> kPalette{{
    {0.85f, 0.15f, 0.15f},
    {0.15f, 0.35f, 0.85f},
    {0.20f, 0.75f, 0.25f},
    {0.90f, 0.80f, 0.15f},
    {0.70f, 0.25f, 0.80f},
    {0.15f, 0.80f, 0.80f},
}};

ImageBuffer background(int height, int width, std::uint64_t seed) {
  ImageBuffer img(height, width);
  RngStream rng(derive_key({seed, 0x6267ULL}));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const float base = 0.35f + 0.15f * static_cast<float>(y) / static_cast<float>(height);
      const float grain = static_cast<float>(rng.uniform(-0.02, 0.02));
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = base + grain;
    }
  }
  return img;
}

// texture 0: vertical stripes, 1: checkerboard, 2: horizontal stripes.
void paint(ImageBuffer& img, const BoundingBox& box, const Color& color, int texture) {
  const int x0 = static_cast<int>(std::lround(box.left));
  const int y0 = static_cast<int>(std::lround(box.top));
  const int w = static_cast<int>(std::lround(box.width));
  const int h = static_cast<int>(std::lround(box.height));
  for (int y = std::max(0, y0); y < std::min(img.height(), y0 + h); ++y) {
    for (int x = std::max(0, x0); x < std::min(img.width(), x0 + w); ++x) {
      const int u = x - x0, v = y - y0;
      bool dark = false;
      switch (texture % 3) {
        case 0: dark = (u / 4) % 2 == 1; break;
        case 1: dark = ((u / 6) + (v / 6)) % 2 == 1; break;
        default: dark = (v / 5) % 2 == 1; break;
      }
      const float k = dark ? 0.55f : 1.0f;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = color[static_cast<std::size_t>(c)] * k;
    }
  }
}

SequenceInfo make_info(const std::string& name, int height, int width, int frames) {
  SequenceInfo info;
  info.name = name;
  info.frame_rate = 25;
  info.image_width = width;
  info.image_height = height;
  info.length = frames;
  info.image_dir = "img1";
  info.image_ext = ".png";
  return info;
}

}  // namespace

SynthSequence make_synthetic(const SynthConfig& requested) {
  if (requested.width < 16 || requested.height < 16 || requested.frames < 1 || requested.objects < 1) {
    throw ValidationError("synthetic sequence needs at least 16x16 pixels, one frame and one object");
  }
  if (requested.box_width < 0 || requested.box_height < 0) {
    throw ValidationError("synthetic box sizes must be non-negative");
  }
  SynthConfig config = requested;
  if (config.box_width == 0) config.box_width = std::min(40, config.width / 4);
  if (config.box_height == 0) config.box_height = std::min(60, config.height / config.objects);
  if (config.box_height < 1 || config.box_width >= config.width ||
      config.box_height * config.objects > config.height) {
    throw ValidationError("synthetic objects do not fit into the frame");
  }
  SynthSequence seq;
  seq.info = make_info("synthetic", config.height, config.width, config.frames);
  RngStream rng(derive_key({config.seed, 0x6f626aULL}));

  struct Mover {
    double x, y, vx;
  };
  std::vector<Mover> movers;
  const double lane = static_cast<double>(config.height) / config.objects;
  const double travel = config.width - config.box_width;
  for (int k = 0; k < config.objects; ++k) {
    const double y = std::floor((k + 0.5) * lane - 0.5 * config.box_height);
    const double x = std::floor(rng.uniform(0.0, travel));
    const double dir = rng.bernoulli(0.5) ? 1.0 : -1.0;
    movers.push_back({x, y, dir * config.speed});
  }

  const auto bg = background(config.height, config.width, config.seed);
  for (int f = 1; f <= config.frames; ++f) {
    ImageBuffer img = bg;
    for (int k = 0; k < config.objects; ++k) {
      auto& m = movers[static_cast<std::size_t>(k)];
      const BoundingBox box{m.x, m.y, static_cast<double>(config.box_width), static_cast<double>(config.box_height)};
      paint(img, box, kPalette[static_cast<std::size_t>(k) % kPalette.size()], k);
      seq.ground_truth.push_back({f, k + 1, box, 1.0});
      m.x += m.vx;
      if (m.x < 0.0 || m.x > travel) {
        m.vx = -m.vx;
        m.x = std::clamp(m.x, 0.0, travel);
      }
    }
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

SynthSequence make_swap_sequence(int frames, std::uint64_t seed) {
  if (frames < 2) throw ValidationError("swap sequence needs at least two frames");
  constexpr int kWidth = 160, kHeight = 120;
  SynthSequence seq;
  seq.info = make_info("swap", kHeight, kWidth, frames);
  const BoundingBox left{30.0, 30.0, 40.0, 60.0};
  const BoundingBox right{90.0, 30.0, 40.0, 60.0};
  const auto bg = background(kHeight, kWidth, seed);
  for (int f = 1; f <= frames; ++f) {
    const bool swapped = f > frames / 2;
    const auto& a = swapped ? right : left;
    const auto& b = swapped ? left : right;
    ImageBuffer img = bg;
    paint(img, a, kPalette[0], 0);
    paint(img, b, kPalette[1], 1);
    seq.ground_truth.push_back({f, 1, a, 1.0});
    seq.ground_truth.push_back({f, 2, b, 1.0});
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

std::vector<DetectionRecord> detections_from_ground_truth(const std::vector<DetectionRecord>& gt) {
  std::vector<DetectionRecord> out = gt;
  for (auto& r : out) {
    r.identity.reset();
    r.confidence = 1.0;
  }
  return out;
}

void write_synthetic(const fs::path& dir, const SynthSequence& seq) {
  std::error_code ec;
  fs::create_directories(dir / seq.info.image_dir, ec);
  fs::create_directories(dir / "gt", ec);
  fs::create_directories(dir / "det", ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text_file(dir / "seqinfo.ini", format_sequence_info(seq.info));
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu", i + 1);
    write_png(dir / seq.info.image_dir / (std::string(name) + seq.info.image_ext), seq.frames[i]);
  }
  save_mot_file(dir / "gt" / "gt.txt", seq.ground_truth);
  save_mot_file(dir / "det" / "det.txt", detections_from_ground_truth(seq.ground_truth));
}

}  // namespace semtrack
