#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semtrack/error.hpp"

namespace semtrack {

struct BoundingBox {
  double left = 0.0;
  double top = 0.0;
  double width = 0.0;
  double height = 0.0;

  double right() const { return left + width; }
  double bottom() const { return top + height; }
  double area() const { return width * height; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// One line of a MOTChallenge file. An absent identity is written as -1.
struct DetectionRecord {
  std::int64_t frame = 1;
  std::optional<std::int64_t> identity;
  BoundingBox box;
  double confidence = 1.0;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

struct SequenceInfo {
  std::string name;
  int frame_rate = 0;
  int image_width = 0;
  int image_height = 0;
  int length = 0;
  std::string image_dir;
  std::string image_ext;
};

struct Sequence {
  std::filesystem::path root;
  SequenceInfo info;
  std::vector<std::filesystem::path> frames;  // index 0 is frame 1
};

struct TrackPoint {
  BoundingBox box;
  double confidence = 1.0;
};

// identity -> (frame -> point). Both maps iterate in ascending order.
using TrackSet = std::map<std::int64_t, std::map<std::int64_t, TrackPoint>>;

// A malformed line. line and field are 1-based; field is 0 when the whole
// line is at fault (e.g. too few fields).
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, std::size_t field, const std::string& what);
  std::size_t line() const { return line_; }
  std::size_t field() const { return field_; }

 private:
  std::size_t line_;
  std::size_t field_;
};

// Well-formed but semantically invalid line (non-positive size, frame < 1...).
class RecordError : public ValidationError {
 public:
  RecordError(std::size_t line, std::size_t field, const std::string& what);
  std::size_t line() const { return line_; }
  std::size_t field() const { return field_; }

 private:
  std::size_t line_;
  std::size_t field_;
};

class SequenceError : public ValidationError {
 public:
  enum class Kind { MissingMetadata, MissingKey, BadValue, MissingFrame, CountMismatch };
  SequenceError(Kind kind, const std::string& what) : ValidationError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class TrackSetError : public ValidationError {
 public:
  enum class Kind { MissingIdentity, DuplicateKey };
  TrackSetError(Kind kind, const std::string& what) : ValidationError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Throws ParseError / RecordError. Accepts `\n` and `\r\n`; blank lines are
// skipped. Lines carry 7 to 10 comma-separated fields.
std::vector<DetectionRecord> parse_mot_file(std::string_view text);

// Canonical form: shortest round-trip decimal for every real, `-1,-1,-1`
// tail, `\n` terminators.
std::string write_mot_file(std::span<const DetectionRecord> records);

std::string format_mot_line(const DetectionRecord& record);

std::vector<DetectionRecord> read_mot_file(const std::filesystem::path& path);
void save_mot_file(const std::filesystem::path& path, std::span<const DetectionRecord> records);

void validate_box(const BoundingBox& box);

SequenceInfo parse_sequence_info(std::string_view text);
std::string format_sequence_info(const SequenceInfo& info);

// Reads <dir>/seqinfo.ini and enumerates <dir>/<imDir>/*<imExt>.
Sequence load_sequence(const std::filesystem::path& dir);

TrackSet records_to_trackset(std::span<const DetectionRecord> records);
std::vector<DetectionRecord> trackset_to_records(const TrackSet& tracks);

// Groups records by frame, preserving file order inside a frame.
std::map<std::int64_t, std::vector<DetectionRecord>> group_by_frame(
    std::span<const DetectionRecord> records);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace semtrack
