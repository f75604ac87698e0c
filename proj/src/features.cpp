#include "popa/features.hpp"

#include <algorithm>
#include <cmath>

namespace popa {

FeatureVector normalize_frame(const SensorFrame& frame) {
  FeatureVector v{};
  for (std::size_t j = 0; j < kSensorCount; ++j) {
    v[j] = static_cast<double>(frame.readings[j]) / kMaxReading;
  }
  return v;
}

std::vector<Window> windows(std::span<const SensorFrame> frames, std::size_t window_len,
                            std::size_t stride) {
  std::vector<Window> out;
  if (window_len == 0 || stride == 0) return out;
  for (std::size_t start = 0; start + window_len <= frames.size(); start += stride) {
    out.push_back({start, frames.subspan(start, window_len)});
  }
  return out;
}

bool occupancy(const SensorFrame& frame, int tau_occupied) {
  int sum = 0;
  for (auto r : frame.readings) sum += r;
  return sum >= tau_occupied;
}

std::size_t occupied_count(std::span<const SensorFrame> frames, int tau_occupied) {
  return static_cast<std::size_t>(std::count_if(
      frames.begin(), frames.end(), [&](const SensorFrame& f) { return occupancy(f, tau_occupied); }));
}

WindowFeatures window_features(const Window& window) {
  WindowFeatures out{};
  const auto n = static_cast<double>(window.frames.size());
  if (window.frames.empty()) return out;
  for (std::size_t j = 0; j < kSensorCount; ++j) {
    // Sums of integers are exact, so the mean and variance are exact up to
    // the final division.
    std::int64_t sum = 0;
    std::int64_t sum_sq = 0;
    int lo = kMaxReading;
    int hi = 0;
    for (const SensorFrame& f : window.frames) {
      const int r = f.readings[j];
      sum += r;
      sum_sq += static_cast<std::int64_t>(r) * r;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    const auto count = static_cast<std::int64_t>(window.frames.size());
    const double mean = static_cast<double>(sum) / n;
    const double var = static_cast<double>(count * sum_sq - sum * sum) / (n * n);
    out[4 * j + 0] = mean / kMaxReading;
    out[4 * j + 1] = std::sqrt(var) / kMaxReading;
    out[4 * j + 2] = static_cast<double>(lo) / kMaxReading;
    out[4 * j + 3] = static_cast<double>(hi) / kMaxReading;
  }
  return out;
}

}  // namespace popa
