#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "semtrack/image.hpp"
#include "semtrack/mot_io.hpp"

namespace semtrack {

struct SynthConfig {
  int width = 320;
  int height = 240;
  int frames = 20;
  int objects = 3;
  int box_width = 0;   // 0: min(40, width / 4)
  int box_height = 0;  // 0: min(60, height / objects)
  double speed = 4.0;  // pixels per frame
  std::uint64_t seed = 0;
};

struct SynthSequence {
  SequenceInfo info;
  std::vector<ImageBuffer> frames;
  std::vector<DetectionRecord> ground_truth;  // identities 1..objects
};

// Objects move horizontally in separate lanes, bouncing off the borders, so
// boxes never overlap. Each object carries its own colour and stripe texture.
SynthSequence make_synthetic(const SynthConfig& config);

// Two objects with distinct textures that exchange positions halfway
// through the sequence, without moving otherwise.
SynthSequence make_swap_sequence(int frames = 10, std::uint64_t seed = 0);

// Writes seqinfo.ini, img1/%06d.png, gt/gt.txt and det/det.txt (the ground
// truth with identity -1 and confidence 1).
void write_synthetic(const std::filesystem::path& dir, const SynthSequence& seq);

std::vector<DetectionRecord> detections_from_ground_truth(const std::vector<DetectionRecord>& gt);

}  // namespace semtrack
