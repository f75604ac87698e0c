#include <chrono>
#include <sstream>

#include "popa/ingest.hpp"
#include "test_support.hpp"

using namespace popa;

namespace {

const std::string kHeader =
    "#popa-recording v1\n#subject=alice,session=1\n"
    "timestamp_ms,s00,s01,s02,s03,s04,s05,s06,s07,s08,s09,s10,s11,s12,s13,s14,s15\n";

std::string zero_row(std::int64_t t) {
  std::string row = std::to_string(t);
  for (int j = 0; j < 16; ++j) row += ",0";
  return row + "\n";
}

SessionRecording regular_recording(std::size_t n) {
  SessionRecording rec{"bob", "2", {}};
  for (std::size_t i = 0; i < n; ++i) {
    rec.frames.push_back(test::constant_frame(static_cast<std::int64_t>(i) * kFramePeriodMs, 7));
  }
  return rec;
}

}  // namespace

TEST_CASE("parse_csv reads header metadata and a zero frame") {
  auto rec = parse_csv(kHeader + zero_row(0));
  CHECK(rec.subject_id == "alice");
  CHECK(rec.session_id == "1");
  REQUIRE(rec.frames.size() == 1);
  for (auto r : rec.frames[0].readings) CHECK(r == 0);
  CHECK_FALSE(rec.canonical());
}

TEST_CASE("1200 rows at 500 ms form a canonical recording") {
  std::string text = kHeader;
  for (int i = 0; i < 1200; ++i) text += zero_row(i * 500);
  auto rec = parse_csv(text);
  CHECK(rec.frames.size() == 1200);
  CHECK(rec.canonical());
}

TEST_CASE("parse_csv errors name the offending line") {
  SUBCASE("reading 1024") {
    std::string row = "0,1024";
    for (int j = 1; j < 16; ++j) row += ",0";
    try {
      parse_csv(kHeader + zero_row(0) + row + "\n");
      FAIL("expected OutOfRange");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OutOfRange);
      CHECK(e.line() == 5);
    }
  }
  SUBCASE("negative reading") {
    std::string row = "0,-1";
    for (int j = 1; j < 16; ++j) row += ",0";
    CHECK_POPA_ERROR(parse_csv(kHeader + row + "\n"), ErrorCode::OutOfRange);
  }
  SUBCASE("too few columns") {
    try {
      parse_csv(kHeader + "0,1,2\n");
      FAIL("expected MalformedRow");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedRow);
      CHECK(e.line() == 4);
    }
  }
  SUBCASE("too many columns") {
    std::string row = "0";
    for (int j = 0; j < 17; ++j) row += ",0";
    CHECK_POPA_ERROR(parse_csv(kHeader + row + "\n"), ErrorCode::MalformedRow);
  }
  SUBCASE("non-integer") {
    std::string row = "0,1.5";
    for (int j = 1; j < 16; ++j) row += ",0";
    CHECK_POPA_ERROR(parse_csv(kHeader + row + "\n"), ErrorCode::MalformedRow);
  }
  SUBCASE("timestamps must increase") {
    try {
      parse_csv(kHeader + zero_row(500) + zero_row(500));
      FAIL("expected NonMonotonicTimestamp");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonMonotonicTimestamp);
      CHECK(e.line() == 5);
    }
  }
  SUBCASE("bad magic") {
    CHECK_POPA_ERROR(parse_csv("#popa-recording v2\n"), ErrorCode::MalformedHeader);
  }
}

TEST_CASE("write_csv of an empty recording is the header only") {
  SessionRecording rec{"alice", "1", {}};
  CHECK(write_csv(rec) == kHeader);
}

TEST_CASE("write_csv of a 1200-frame session has 1200 data rows") {
  const std::string text = write_csv(regular_recording(1200));
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 3 + 1200);
}

TEST_CASE("parse/write round trip on random valid recordings") {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const SessionRecording rec = test::random_recording(rng);
    const std::string text = write_csv(rec);
    CHECK(parse_csv(text) == rec);
    CHECK(write_csv(parse_csv(text)) == text);
  }
}

TEST_CASE("replay yields frames in order") {
  SUBCASE("three frames as fast as possible") {
    auto rec = regular_recording(3);
    std::vector<SensorFrame> seen;
    replay(rec, Pace::AsFast, [&](const SensorFrame& f) { seen.push_back(f); });
    CHECK(seen == rec.frames);
  }
  SUBCASE("1200 frames end at 599500 ms") {
    auto rec = regular_recording(1200);
    Replay stream(rec, Pace::AsFast);
    std::size_t count = 0;
    std::int64_t last = -1;
    while (auto f = stream.next()) {
      CHECK(f->timestamp_ms > last);
      last = f->timestamp_ms;
      ++count;
    }
    CHECK(count == 1200);
    CHECK(last == 599500);
  }
  SUBCASE("real-time pacing honours timestamps") {
    auto rec = regular_recording(4);
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t count = 0;
    replay(rec, Pace::RealTime, [&](const SensorFrame&) { ++count; });
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(count == 4);
    CHECK(elapsed >= 1.5);
  }
}

TEST_CASE("validate flags out-of-range readings and timestamps") {
  SessionRecording rec = regular_recording(3);
  CHECK_NOTHROW(validate(rec));
  rec.frames[1].readings[4] = 2000;
  CHECK_POPA_ERROR(validate(rec), ErrorCode::OutOfRange);
  rec = regular_recording(3);
  rec.frames[2].timestamp_ms = 0;
  CHECK_POPA_ERROR(validate(rec), ErrorCode::NonMonotonicTimestamp);
}

TEST_CASE("row-by-row reader") {
  Rng rng(8);
  auto rec = test::random_recording(rng, 30);
  std::istringstream in(write_csv(rec));
  CsvReader reader(in);
  CHECK(reader.subject_id() == rec.subject_id);
  CHECK(reader.session_id() == rec.session_id);
  std::size_t n = 0;
  while (auto f = reader.next()) {
    REQUIRE(n < rec.frames.size());
    CHECK(f->timestamp_ms == rec.frames[n].timestamp_ms);
    CHECK(f->readings == rec.frames[n].readings);
    ++n;
  }
  CHECK(n == rec.frames.size());

  std::istringstream bad("#popa-recording v2\n");
  CHECK_POPA_ERROR(CsvReader{bad}, ErrorCode::MalformedHeader);
}
