#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "popa/classify.hpp"
#include "popa/frame.hpp"

namespace popa {

inline constexpr std::string_view kProfileMagic = "#popa-profile v1";
inline constexpr std::string_view kProfileExtension = ".popa-profile";

/// Enrollment data plus everything needed to retrain the subject's model.
/// Models are never stored; loading a profile and retraining with the same
/// background reproduces the model byte for byte.
struct SubjectProfile {
  std::string subject_id;
  SessionRecording enrollment;
  std::uint64_t model_seed = 1;
  AlgorithmSpec algorithm;
  std::string created;  // ISO-8601, UTC
  std::string updated;

  bool operator==(const SubjectProfile&) const = default;
};

/// Letters, digits, '.', '_' and '-'; nonempty; must not start with '.'.
bool valid_subject_id(std::string_view id);

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string iso8601(std::int64_t unix_seconds);
std::string iso8601_now();

std::string write_profile(const SubjectProfile& profile);
SubjectProfile parse_profile(std::string_view text);

/// Writes <dir>/<subject_id>.popa-profile via a temp file and rename.
std::filesystem::path save_profile(const SubjectProfile& profile,
                                   const std::filesystem::path& directory);
SubjectProfile load_profile(const std::filesystem::path& path);

/// (subject_id, path) for every profile in `directory`, sorted by subject id.
std::vector<std::pair<std::string, std::filesystem::path>> list_profiles(
    const std::filesystem::path& directory);

}  // namespace popa
