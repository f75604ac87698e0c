#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "popa/frame.hpp"

namespace popa {

using SensorVector = std::array<double, kSensorCount>;

/// Generative model of one sitter. Frames are
///   round(clamp(weight_scale * (baseline + posture_blend) + N(0, noise_sigma)))
/// where the posture index follows a renewal process with exponential dwell
/// times and linear transition ramps.
struct SyntheticSubjectSpec {
  std::string subject_id;
  SensorVector baseline{};
  std::vector<SensorVector> postures;  // K >= 1 offsets
  double dwell_mean_s = 120.0;
  double shift_duration_s = 2.0;
  double noise_sigma = 10.0;
  double weight_scale = 1.0;
  std::uint64_t seed = 0;
  // Number of drift perturbations applied so far; selects the drift stream and
  // never affects session simulation.
  std::uint32_t drift_epoch = 0;

  bool operator==(const SyntheticSubjectSpec&) const = default;
};

void validate(const SyntheticSubjectSpec& spec);

/// Sampling ranges for a synthetic cohort. Every range is closed and every
/// count-valued range must sit inside [0, 1023] once weight-scaled.
struct PopulationParams {
  int n_subjects = 30;
  double baseline_mean = 420.0;
  double baseline_spread = 75.0;   // baseline ~ U[mean - spread, mean + spread]
  double posture_sigma = 50.0;     // posture offsets ~ N(0, posture_sigma)
  int min_postures = 2;
  int max_postures = 3;
  double dwell_min_s = 90.0;
  double dwell_max_s = 180.0;
  double shift_duration_s = 3.0;
  double noise_min = 15.0;
  double noise_max = 90.0;
  double weight_min = 0.85;
  double weight_max = 1.15;
  std::uint64_t seed = 1;
};

void validate(const PopulationParams& params);

std::vector<SyntheticSubjectSpec> generate_population(const PopulationParams& params);

/// Minimum pairwise euclidean distance between subject baselines (0 for fewer
/// than two subjects).
double min_baseline_distance(const std::vector<SyntheticSubjectSpec>& specs);

SessionRecording simulate_session(const SyntheticSubjectSpec& spec, double duration_s,
                                  std::uint64_t session_seed,
                                  std::string session_id = "1");

/// Perturbs baseline and posture offsets by N(0, drift_magnitude) and rescales
/// dwell_mean_s by a factor in [0.8, 1.25]. Magnitude 0 is the identity on the
/// simulated sessions.
SyntheticSubjectSpec apply_session_drift(const SyntheticSubjectSpec& spec,
                                         double drift_magnitude);

// `#popa-spec v1` text format, key=value lines, vectors as comma lists.
inline constexpr std::string_view kSpecMagic = "#popa-spec v1";

void write_spec(std::ostream& out, const SyntheticSubjectSpec& spec);
std::string write_spec(const SyntheticSubjectSpec& spec);
SyntheticSubjectSpec parse_spec(std::istream& in);
SyntheticSubjectSpec parse_spec(std::string_view text);

}  // namespace popa
