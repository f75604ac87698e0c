#include "popa/frame.hpp"

#include "popa/error.hpp"

namespace popa {

bool SessionRecording::canonical() const {
  if (frames.size() != kCanonicalFrames) return false;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].timestamp_ms - frames[i - 1].timestamp_ms != kFramePeriodMs) return false;
  }
  return true;
}

void validate(const SessionRecording& recording) {
  for (std::size_t i = 0; i < recording.frames.size(); ++i) {
    const SensorFrame& f = recording.frames[i];
    if (f.timestamp_ms < 0) {
      throw Error(ErrorCode::OutOfRange, "negative timestamp", i + 1);
    }
    for (auto r : f.readings) {
      if (r > kMaxReading) throw Error(ErrorCode::OutOfRange, "reading above 1023", i + 1);
    }
    if (i > 0 && f.timestamp_ms <= recording.frames[i - 1].timestamp_ms) {
      throw Error(ErrorCode::NonMonotonicTimestamp, "timestamps must increase", i + 1);
    }
  }
}

}  // namespace popa
