#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace popa {

inline constexpr std::size_t kSensorCount = 16;
inline constexpr int kMaxReading = 1023;  // 10-bit ADC
inline constexpr std::int64_t kFramePeriodMs = 500;
inline constexpr std::size_t kCanonicalFrames = 1200;  // 10 min at 0.5 s

using Readings = std::array<std::uint16_t, kSensorCount>;

struct SensorFrame {
  std::int64_t timestamp_ms = 0;
  Readings readings{};

  bool operator==(const SensorFrame&) const = default;
};

struct SessionRecording {
  std::string subject_id;
  std::string session_id;
  std::vector<SensorFrame> frames;

  bool operator==(const SessionRecording&) const = default;

  /// A full 10-minute capture at the nominal 0.5 s cadence.
  bool canonical() const;
};

/// Throws popa::Error if any frame invariant is violated (range, monotone
/// timestamps). Line numbers in the error are 1-based frame indices.
void validate(const SessionRecording& recording);

}  // namespace popa
