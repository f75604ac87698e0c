#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "popa/classify.hpp"
#include "popa/features.hpp"
#include "popa/frame.hpp"

namespace popa {

struct SessionConfig {
  std::size_t enroll_frames = 600;  // 5 min
  std::size_t window_len = kDefaultWindowLen;
  double theta_accept = 0.5;
  std::size_t vacancy_grace_windows = 0;
  std::size_t retrain_interval_windows = 1;
  int tau_occupied = kDefaultTauOccupied;
  // Background frames are subsampled (seeded) to at most this many instances
  // before training the genuine-vs-background model. 0 = no cap.
  std::size_t background_limit = 1200;
  AlgorithmSpec algorithm;
  std::uint64_t seed = 1;
};

void validate(const SessionConfig& config);

inline constexpr std::string_view kGenuineLabel = "genuine";
inline constexpr std::string_view kBackgroundLabel = "background";

enum class Phase { Enrolling, Authenticated, Vacant, DeAuthenticated };
enum class DeauthReason { ImpostorSuspected, WalkedAway, Manual };
enum class Verdict { Accepted, Rejected, ChairVacant };

std::string_view to_string(Phase phase);
std::string_view to_string(DeauthReason reason);
std::string_view to_string(Verdict verdict);

struct AuthDecision {
  std::size_t window_index = 0;
  double genuine_fraction = 0.0;
  Verdict verdict = Verdict::Rejected;

  bool operator==(const AuthDecision&) const = default;
};

/// Continuous-authentication state. Transitions only through ingest_frame and
/// deauthenticate; the model is immutable and shared between copies.
struct SessionState {
  SessionConfig config;
  std::shared_ptr<const Dataset> background;  // relabelled + capped, frame features

  Phase phase = Phase::Enrolling;
  std::optional<DeauthReason> reason;
  std::size_t vacant_windows = 0;
  std::size_t next_window = 0;
  std::size_t accepted_windows = 0;

  std::vector<SensorFrame> training;  // genuine frames, append-only
  std::shared_ptr<const TrainedModel> model;
  std::vector<SensorFrame> buffer;

  std::size_t collected() const { return training.size(); }
};

/// `background` holds 16-wide frame features of other people; every instance
/// is treated as a non-genuine example regardless of its label.
SessionState new_session(const SessionConfig& config, const Dataset& background);

std::pair<SessionState, std::optional<AuthDecision>> ingest_frame(SessionState state,
                                                                  const SensorFrame& frame);

/// First reason wins if the session is already terminated.
SessionState deauthenticate(SessionState state, DeauthReason reason = DeauthReason::Manual);

/// Relabels every instance as background and applies the seeded
/// background_limit cap. Throws EmptyBackground / DimensionMismatch.
Dataset prepare_background(const Dataset& background, const SessionConfig& config);

/// Genuine-vs-background training set for `genuine` frames.
Dataset authentication_dataset(std::span<const SensorFrame> genuine, const Dataset& background);

TrainedModel train_authentication_model(std::span<const SensorFrame> genuine,
                                        const Dataset& background, const SessionConfig& config);

/// `window_index,verdict,genuine_fraction` with 4 decimals.
std::string format_decision(const AuthDecision& decision);
/// `DEAUTH,<reason>`.
std::string format_deauth(DeauthReason reason);

struct Identification {
  std::string subject_id;
  double confidence = 0.0;
};

/// One-to-n match of a window against a multi-class model whose labels are
/// subject ids. Only occupied frames vote; throws WindowVacant when half or
/// more of the window is vacant.
Identification identify(const Window& window, const TrainedModel& population,
                        const SessionConfig& config);

/// Multi-class identification model over every frame of the given recordings,
/// labelled by subject id.
TrainedModel train_identification_model(std::span<const SessionRecording> recordings,
                                        const AlgorithmSpec& algorithm, std::uint64_t seed);

}  // namespace popa
