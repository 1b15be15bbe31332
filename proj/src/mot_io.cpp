#include "semtrack/mot_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace semtrack {

namespace fs = std::filesystem;

namespace {

std::string located(std::size_t line, std::size_t field, const std::string& what) {
  std::ostringstream os;
  os << "line " << line;
  if (field > 0) os << ", field " << field;
  os << ": " << what;
  return os.str();
}

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) { return c != ' ' && c != '\t'; };
  auto b = std::find_if(s.begin(), s.end(), not_space);
  auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
  return b < e ? std::string_view(b, static_cast<std::size_t>(e - b)) : std::string_view{};
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::int64_t parse_int(std::string_view raw, std::size_t line, std::size_t field) {
  auto s = trim(raw);
  std::int64_t v = 0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(line, field, "expected an integer, got '" + std::string(raw) + "'");
  }
  return v;
}

double parse_real(std::string_view raw, std::size_t line, std::size_t field) {
  auto s = trim(raw);
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(line, field, "expected a number, got '" + std::string(raw) + "'");
  }
  if (!std::isfinite(v)) throw RecordError(line, field, "value is not finite");
  return v;
}

void append_real(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

ParseError::ParseError(std::size_t line, std::size_t field, const std::string& what)
    : ValidationError(located(line, field, what)), line_(line), field_(field) {}

RecordError::RecordError(std::size_t line, std::size_t field, const std::string& what)
    : ValidationError(located(line, field, what)), line_(line), field_(field) {}

void validate_box(const BoundingBox& box) {
  if (!std::isfinite(box.left) || !std::isfinite(box.top) || !std::isfinite(box.width) ||
      !std::isfinite(box.height)) {
    throw ValidationError("bounding box has non-finite coordinates");
  }
  if (!(box.width > 0.0) || !(box.height > 0.0)) {
    throw ValidationError("bounding box width and height must be positive");
  }
}

std::vector<DetectionRecord> parse_mot_file(std::string_view text) {
  std::vector<DetectionRecord> records;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;

    auto fields = split(line, ',');
    if (fields.size() < 7 || fields.size() > 10) {
      throw ParseError(line_no, 0,
                       "expected 7 to 10 comma-separated fields, got " +
                           std::to_string(fields.size()));
    }

    DetectionRecord r;
    r.frame = parse_int(fields[0], line_no, 1);
    const auto id = parse_int(fields[1], line_no, 2);
    r.box.left = parse_real(fields[2], line_no, 3);
    r.box.top = parse_real(fields[3], line_no, 4);
    r.box.width = parse_real(fields[4], line_no, 5);
    r.box.height = parse_real(fields[5], line_no, 6);
    r.confidence = parse_real(fields[6], line_no, 7);
    for (std::size_t f = 7; f < fields.size(); ++f) {
      (void)parse_real(fields[f], line_no, f + 1);
    }

    if (r.frame < 1) throw RecordError(line_no, 1, "frame index must be >= 1");
    if (id == -1) {
      r.identity.reset();
    } else if (id >= 1) {
      r.identity = id;
    } else {
      throw RecordError(line_no, 2, "identity must be >= 1 or -1");
    }
    if (!(r.box.width > 0.0)) throw RecordError(line_no, 5, "width must be positive");
    if (!(r.box.height > 0.0)) throw RecordError(line_no, 6, "height must be positive");
    records.push_back(r);
  }
  return records;
}

std::string format_mot_line(const DetectionRecord& r) {
  std::string out = std::to_string(r.frame);
  out += ',';
  out += std::to_string(r.identity.value_or(-1));
  for (double v : {r.box.left, r.box.top, r.box.width, r.box.height, r.confidence}) {
    out += ',';
    append_real(out, v);
  }
  out += ",-1,-1,-1";
  return out;
}

std::string write_mot_file(std::span<const DetectionRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += format_mot_line(r);
    out += '\n';
  }
  return out;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<DetectionRecord> read_mot_file(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("no such file: " + path.string());
  return parse_mot_file(read_text_file(path));
}

void save_mot_file(const fs::path& path, std::span<const DetectionRecord> records) {
  write_text_file(path, write_mot_file(records));
}

SequenceInfo parse_sequence_info(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line = trim(line.substr(0, line.size() - 1));
    if (line.empty() || line.front() == '[' || line.front() == ';' || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) continue;
    kv[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }

  auto get = [&](std::string_view key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw SequenceError(SequenceError::Kind::MissingKey,
                          "sequence metadata is missing '" + std::string(key) + "'");
    }
    return it->second;
  };
  auto get_int = [&](std::string_view key, int min_value) {
    const auto& s = get(key);
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v < min_value) {
      throw SequenceError(SequenceError::Kind::BadValue,
                          "sequence metadata '" + std::string(key) + "' has invalid value '" + s + "'");
    }
    return v;
  };

  SequenceInfo info;
  info.name = get("name");
  info.image_dir = get("imDir");
  info.frame_rate = get_int("frameRate", 1);
  info.length = get_int("seqLength", 1);
  info.image_width = get_int("imWidth", 1);
  info.image_height = get_int("imHeight", 1);
  info.image_ext = get("imExt");
  return info;
}

std::string format_sequence_info(const SequenceInfo& info) {
  std::ostringstream os;
  os << "[Sequence]\n"
     << "name=" << info.name << '\n'
     << "imDir=" << info.image_dir << '\n'
     << "frameRate=" << info.frame_rate << '\n'
     << "seqLength=" << info.length << '\n'
     << "imWidth=" << info.image_width << '\n'
     << "imHeight=" << info.image_height << '\n'
     << "imExt=" << info.image_ext << '\n';
  return os.str();
}

Sequence load_sequence(const fs::path& dir) {
  const auto meta = dir / "seqinfo.ini";
  if (!fs::is_regular_file(meta)) {
    throw SequenceError(SequenceError::Kind::MissingMetadata,
                        "no seqinfo.ini in " + dir.string());
  }
  Sequence seq;
  seq.root = dir;
  seq.info = parse_sequence_info(read_text_file(meta));

  const auto image_dir = dir / seq.info.image_dir;
  if (!fs::is_directory(image_dir)) {
    throw SequenceError(SequenceError::Kind::MissingFrame,
                        "image directory " + image_dir.string() + " does not exist");
  }

  std::vector<std::pair<long long, fs::path>> indexed;
  for (const auto& entry : fs::directory_iterator(image_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != seq.info.image_ext) continue;
    const auto stem = entry.path().stem().string();
    long long idx = 0;
    auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), idx);
    if (ec != std::errc{} || ptr != stem.data() + stem.size()) continue;
    indexed.emplace_back(idx, entry.path());
  }
  if (indexed.size() != static_cast<std::size_t>(seq.info.length)) {
    throw SequenceError(SequenceError::Kind::CountMismatch,
                        "declared seqLength=" + std::to_string(seq.info.length) + " but found " +
                            std::to_string(indexed.size()) + " images in " + image_dir.string());
  }
  std::sort(indexed.begin(), indexed.end());
  for (std::size_t i = 0; i < indexed.size(); ++i) {
    if (indexed[i].first != static_cast<long long>(i + 1)) {
      throw SequenceError(SequenceError::Kind::MissingFrame,
                          "frame " + std::to_string(i + 1) + " is missing from " + image_dir.string());
    }
    seq.frames.push_back(indexed[i].second);
  }
  return seq;
}

TrackSet records_to_trackset(std::span<const DetectionRecord> records) {
  TrackSet tracks;
  for (const auto& r : records) {
    if (!r.identity) {
      throw TrackSetError(TrackSetError::Kind::MissingIdentity,
                          "record on frame " + std::to_string(r.frame) + " has no identity");
    }
    auto [it, inserted] = tracks[*r.identity].emplace(r.frame, TrackPoint{r.box, r.confidence});
    if (!inserted) {
      throw TrackSetError(TrackSetError::Kind::DuplicateKey,
                          "identity " + std::to_string(*r.identity) + " appears twice on frame " +
                              std::to_string(r.frame));
    }
  }
  return tracks;
}

std::vector<DetectionRecord> trackset_to_records(const TrackSet& tracks) {
  std::vector<DetectionRecord> out;
  for (const auto& [id, points] : tracks) {
    for (const auto& [frame, p] : points) {
      out.push_back(DetectionRecord{frame, id, p.box, p.confidence});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.frame < b.frame;
  });
  return out;
}

std::map<std::int64_t, std::vector<DetectionRecord>> group_by_frame(
    std::span<const DetectionRecord> records) {
  std::map<std::int64_t, std::vector<DetectionRecord>> out;
  for (const auto& r : records) out[r.frame].push_back(r);
  return out;
}

}  // namespace semtrack
