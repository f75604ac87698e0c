#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "popa/classify.hpp"
#include "popa/features.hpp"
#include "popa/session.hpp"
#include "popa/synth.hpp"

namespace popa {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `key=value` lines; `#` starts a comment, blank lines are ignored and
/// whitespace around keys and values is trimmed.
KeyValues parse_key_values(std::string_view text);

/// Everything needed to re-run an experiment or a monitor session.
struct ExperimentConfig {
  PopulationParams population;
  SessionConfig session;  // also owns window_len and tau_occupied
  FeatureMode feature_mode = FeatureMode::Frame;
  std::size_t stride = kDefaultWindowLen;
  std::uint64_t seed = 1;

  /// Overrides fields from key/value pairs. Unknown keys and unparsable values
  /// throw BadConfig.
  void apply(const KeyValues& entries);
  KeyValues to_key_values() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

std::string_view to_string(FeatureMode mode);
FeatureMode feature_mode_from_string(std::string_view text);

}  // namespace popa
