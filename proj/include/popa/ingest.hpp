#pragma once

#include <chrono>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "popa/frame.hpp"

namespace popa {

// Canonical recording CSV:
//   #popa-recording v1
//   #subject=<id>,session=<id>
//   timestamp_ms,s00,s01,...,s15
//   <17 comma separated integers per row>

inline constexpr std::string_view kRecordingMagic = "#popa-recording v1";

/// Reads a recording row by row, for streams that are still being written.
/// The header is checked on construction.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in, std::size_t first_line = 1);

  const std::string& subject_id() const { return subject_id_; }
  const std::string& session_id() const { return session_id_; }
  /// Next frame, or nullopt at end of input.
  std::optional<SensorFrame> next();

 private:
  std::istream& in_;
  std::size_t line_no_;
  std::string subject_id_;
  std::string session_id_;
  std::optional<std::int64_t> last_timestamp_;
};

/// Parses a recording. `first_line` offsets the reported line numbers when the
/// CSV is embedded in a larger file.
SessionRecording parse_csv(std::istream& in, std::size_t first_line = 1);
SessionRecording parse_csv(std::string_view text);

void write_csv(std::ostream& out, const SessionRecording& recording);
std::string write_csv(const SessionRecording& recording);

SessionRecording read_recording_file(const std::string& path);
void write_recording_file(const std::string& path, const SessionRecording& recording);

enum class Pace { AsFast, RealTime };

/// Single-consumer frame stream over a recording. RealTime pacing sleeps so that
/// frame i is yielded no earlier than (t_i - t_0) after the first one.
class Replay {
 public:
  Replay(const SessionRecording& recording, Pace pace);

  std::optional<SensorFrame> next();

 private:
  const SessionRecording* recording_;
  Pace pace_;
  std::size_t index_ = 0;
  std::chrono::steady_clock::time_point start_;
};

/// Convenience: drains a Replay into `sink`.
void replay(const SessionRecording& recording, Pace pace,
            const std::function<void(const SensorFrame&)>& sink);

}  // namespace popa
