#include <gtest/gtest.h>

#include <vector>

#include "semtrack/image.hpp"
#include "semtrack/mot_io.hpp"
#include "test_util.hpp"

namespace semtrack {
namespace {

namespace fs = std::filesystem;

TEST(ParseMot, FullLineMapsFields) {
  const auto r = parse_mot_file("1,1,100.0,200.0,50.0,80.0,1,-1,-1,-1");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].frame, 1);
  EXPECT_EQ(r[0].identity, 1);
  EXPECT_EQ(r[0].box, (BoundingBox{100, 200, 50, 80}));
  EXPECT_EQ(r[0].confidence, 1.0);
}

TEST(ParseMot, MinusOneIdentityIsAbsent) {
  const auto r = parse_mot_file("1,-1,0,0,10,10,0.9");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_FALSE(r[0].identity.has_value());
  EXPECT_EQ(r[0].box, (BoundingBox{0, 0, 10, 10}));
  EXPECT_DOUBLE_EQ(r[0].confidence, 0.9);
}

TEST(ParseMot, MalformedNumberReportsLineAndField) {
  try {
    parse_mot_file("1,1,abc,0,10,10,1");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.field(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(ParseMot, ErrorOnLaterLineCountsBlankLines) {
  try {
    parse_mot_file("1,1,0,0,10,10,1\r\n\n2,1,0,0,10\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseMot, NonPositiveSizeIsRecordError) {
  EXPECT_THROW(parse_mot_file("1,1,0,0,0,10,1"), RecordError);
  EXPECT_THROW(parse_mot_file("0,1,0,0,10,10,1"), RecordError);
}

TEST(ParseMot, TooManyFieldsRejected) { EXPECT_THROW(parse_mot_file("1,1,0,0,10,10,1,-1,-1,-1,5"), ParseError); }

TEST(WriteMot, EmptyListIsEmptyText) { EXPECT_EQ(write_mot_file(std::vector<DetectionRecord>{}), ""); }

TEST(WriteMot, CanonicalForm) {
  const DetectionRecord r{1, 1, {100, 200, 50, 80}, 1.0};
  EXPECT_EQ(format_mot_line(r), "1,1,100,200,50,80,1,-1,-1,-1");
  const DetectionRecord anon{3, std::nullopt, {0.5, 1.25, 10, 10}, 0.9};
  EXPECT_EQ(format_mot_line(anon), "3,-1,0.5,1.25,10,10,0.9,-1,-1,-1");
}

TEST(WriteMot, RoundTripsShortestDecimals) {
  const std::vector<DetectionRecord> in{{1, 7, {0.1, 1e-7, 3.0000000000000004, 123456.789}, -0.3},
                                        {2, std::nullopt, {-5, -6.5, 1e300, 2e-300}, 0.0}};
  EXPECT_EQ(parse_mot_file(write_mot_file(in)), in);
}

TEST(TrackSet, GroupsByIdentity) {
  const auto ts = records_to_trackset(parse_mot_file("1,1,0,0,10,10,1\n2,1,1,0,10,10,1\n2,2,50,0,10,10,1\n"));
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(ts.at(1).size(), 2u);
  EXPECT_EQ(ts.at(2).size(), 1u);
  EXPECT_EQ(trackset_to_records(ts).size(), 3u);
}

TEST(TrackSet, DuplicateKeyRejected) {
  try {
    records_to_trackset(parse_mot_file("1,1,0,0,10,10,1\n1,1,5,5,10,10,1\n"));
    FAIL() << "expected TrackSetError";
  } catch (const TrackSetError& e) {
    EXPECT_EQ(e.kind(), TrackSetError::Kind::DuplicateKey);
  }
}

TEST(TrackSet, MissingIdentityRejected) {
  try {
    records_to_trackset(parse_mot_file("1,-1,0,0,10,10,1\n"));
    FAIL() << "expected TrackSetError";
  } catch (const TrackSetError& e) {
    EXPECT_EQ(e.kind(), TrackSetError::Kind::MissingIdentity);
  }
}

class SequenceDir : public ::testing::Test {
 protected:
  void write(int declared, int present, bool with_width = true) {
    SequenceInfo info{"seq", 25, 32, 24, declared, "img1", ".png"};
    std::string text = format_sequence_info(info);
    if (!with_width) text.erase(text.find("imWidth"), text.find('\n', text.find("imWidth")) - text.find("imWidth") + 1);
    write_text_file(dir.path() / "seqinfo.ini", text);
    fs::create_directories(dir.path() / "img1");
    for (int i = 1; i <= present; ++i) {
      char name[16];
      std::snprintf(name, sizeof(name), "%06d.png", i);
      write_png(dir.path() / "img1" / name, ImageBuffer(24, 32, 0.5f));
    }
  }
  test::TempDir dir;
};

TEST_F(SequenceDir, WellFormedSequenceLoads) {
  write(5, 5);
  const auto seq = load_sequence(dir.path());
  EXPECT_EQ(seq.info.length, 5);
  ASSERT_EQ(seq.frames.size(), 5u);
  EXPECT_EQ(seq.frames[0].filename(), "000001.png");
  EXPECT_EQ(seq.frames[4].filename(), "000005.png");
}

TEST_F(SequenceDir, CountMismatch) {
  write(5, 4);
  try {
    load_sequence(dir.path());
    FAIL() << "expected SequenceError";
  } catch (const SequenceError& e) {
    EXPECT_EQ(e.kind(), SequenceError::Kind::CountMismatch);
  }
}

TEST_F(SequenceDir, MissingWidthKey) {
  write(5, 5, false);
  try {
    load_sequence(dir.path());
    FAIL() << "expected SequenceError";
  } catch (const SequenceError& e) {
    EXPECT_EQ(e.kind(), SequenceError::Kind::MissingKey);
  }
}

TEST_F(SequenceDir, MissingMetadata) {
  try {
    load_sequence(dir.path());
    FAIL() << "expected SequenceError";
  } catch (const SequenceError& e) {
    EXPECT_EQ(e.kind(), SequenceError::Kind::MissingMetadata);
  }
}

}  // namespace
}  // namespace semtrack
