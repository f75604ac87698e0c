#include "popa/ingest.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "popa/error.hpp"

namespace popa {

namespace {

constexpr std::string_view kColumnHeader =
    "timestamp_ms,s00,s01,s02,s03,s04,s05,s06,s07,s08,s09,s10,s11,s12,s13,s14,s15";

bool parse_int(std::string_view field, std::int64_t& out) {
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc{} && ptr == field.data() + field.size();
}

void check_id(std::string_view id, std::string_view what) {
  if (id.find_first_of(",\n\r=") != std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " may not contain , = or newlines");
  }
}

SensorFrame parse_row(std::string_view line, std::size_t line_no) {
  SensorFrame frame;
  std::size_t column = 0;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    const std::string_view field =
        line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (column > kSensorCount) {
      throw Error(ErrorCode::MalformedRow, "expected 17 columns", line_no);
    }
    std::int64_t value = 0;
    if (!parse_int(field, value)) {
      throw Error(ErrorCode::MalformedRow, "non-integer field '" + std::string(field) + "'", line_no);
    }
    if (column == 0) {
      if (value < 0) throw Error(ErrorCode::OutOfRange, "negative timestamp", line_no);
      frame.timestamp_ms = value;
    } else {
      if (value < 0 || value > kMaxReading) {
        throw Error(ErrorCode::OutOfRange,
                    "reading " + std::to_string(value) + " outside 0-1023", line_no);
      }
      frame.readings[column - 1] = static_cast<std::uint16_t>(value);
    }
    ++column;
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (column != kSensorCount + 1) {
    throw Error(ErrorCode::MalformedRow, "expected 17 columns, got " + std::to_string(column),
                line_no);
  }
  return frame;
}

}  // namespace

CsvReader::CsvReader(std::istream& in, std::size_t first_line) : in_(in), line_no_(first_line) {
  std::string line;
  if (!std::getline(in_, line) || line != kRecordingMagic) {
    throw Error(ErrorCode::MalformedHeader, "expected '#popa-recording v1'", line_no_);
  }
  ++line_no_;
  if (!std::getline(in_, line) || !line.starts_with("#subject=")) {
    throw Error(ErrorCode::MalformedHeader, "expected '#subject=<id>,session=<id>'", line_no_);
  }
  const std::string_view meta = std::string_view(line).substr(9);
  const std::size_t sep = meta.find(",session=");
  if (sep == std::string_view::npos) {
    throw Error(ErrorCode::MalformedHeader, "missing session id", line_no_);
  }
  subject_id_ = std::string(meta.substr(0, sep));
  session_id_ = std::string(meta.substr(sep + 9));
  ++line_no_;
  if (!std::getline(in_, line) || line != kColumnHeader) {
    throw Error(ErrorCode::MalformedHeader, "bad column header", line_no_);
  }
  ++line_no_;
}

std::optional<SensorFrame> CsvReader::next() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  SensorFrame frame = parse_row(line, line_no_);
  if (last_timestamp_ && frame.timestamp_ms <= *last_timestamp_) {
    throw Error(ErrorCode::NonMonotonicTimestamp, "timestamps must increase", line_no_);
  }
  last_timestamp_ = frame.timestamp_ms;
  ++line_no_;
  return frame;
}

SessionRecording parse_csv(std::istream& in, std::size_t first_line) {
  CsvReader reader(in, first_line);
  SessionRecording rec;
  rec.subject_id = reader.subject_id();
  rec.session_id = reader.session_id();
  while (auto frame = reader.next()) rec.frames.push_back(*frame);
  return rec;
}

SessionRecording parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_csv(in);
}

void write_csv(std::ostream& out, const SessionRecording& recording) {
  check_id(recording.subject_id, "subject id");
  check_id(recording.session_id, "session id");
  out << kRecordingMagic << '\n'
      << "#subject=" << recording.subject_id << ",session=" << recording.session_id << '\n'
      << kColumnHeader << '\n';
  std::string row;
  char buf[24];
  for (const SensorFrame& f : recording.frames) {
    row.clear();
    auto res = std::to_chars(buf, buf + sizeof buf, f.timestamp_ms);
    row.append(buf, res.ptr);
    for (auto r : f.readings) {
      row.push_back(',');
      res = std::to_chars(buf, buf + sizeof buf, r);
      row.append(buf, res.ptr);
    }
    row.push_back('\n');
    out << row;
  }
}

std::string write_csv(const SessionRecording& recording) {
  std::ostringstream out;
  write_csv(out, recording);
  return out.str();
}

SessionRecording read_recording_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  return parse_csv(in);
}

void write_recording_file(const std::string& path, const SessionRecording& recording) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  write_csv(out, recording);
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path);
}

Replay::Replay(const SessionRecording& recording, Pace pace)
    : recording_(&recording), pace_(pace), start_(std::chrono::steady_clock::now()) {}

std::optional<SensorFrame> Replay::next() {
  const auto& frames = recording_->frames;
  if (index_ >= frames.size()) return std::nullopt;
  const SensorFrame& frame = frames[index_];
  if (pace_ == Pace::RealTime) {
    if (index_ == 0) {
      start_ = std::chrono::steady_clock::now();
    } else {
      const auto offset =
          std::chrono::milliseconds(frame.timestamp_ms - frames.front().timestamp_ms);
      std::this_thread::sleep_until(start_ + offset);
    }
  }
  ++index_;
  return frame;
}

void replay(const SessionRecording& recording, Pace pace,
            const std::function<void(const SensorFrame&)>& sink) {
  Replay stream(recording, pace);
  while (auto frame = stream.next()) sink(*frame);
}

}  // namespace popa
