#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "popa/frame.hpp"

namespace popa {

inline constexpr std::size_t kWindowFeatureDim = kSensorCount * 4;
inline constexpr int kDefaultTauOccupied = 400;
inline constexpr std::size_t kDefaultWindowLen = 20;  // 10 s

using FeatureVector = std::array<double, kSensorCount>;
using WindowFeatures = std::array<double, kWindowFeatureDim>;

enum class FeatureMode { Frame, Window };

/// A view of `frames.size()` consecutive frames starting at `start_index` of
/// the underlying sequence. Does not own the frames.
struct Window {
  std::size_t start_index = 0;
  std::span<const SensorFrame> frames;
};

FeatureVector normalize_frame(const SensorFrame& frame);

std::vector<Window> windows(std::span<const SensorFrame> frames,
                            std::size_t window_len = kDefaultWindowLen,
                            std::size_t stride = kDefaultWindowLen);

bool occupancy(const SensorFrame& frame, int tau_occupied = kDefaultTauOccupied);

std::size_t occupied_count(std::span<const SensorFrame> frames,
                           int tau_occupied = kDefaultTauOccupied);

/// Per sensor: normalized mean, population std, min, max; sensor-major.
WindowFeatures window_features(const Window& window);

}  // namespace popa
