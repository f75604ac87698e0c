#include "popa/session.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "popa/error.hpp"
#include "popa/rng.hpp"

namespace popa {

namespace {

constexpr std::uint64_t kBackgroundStream = 0xBAC6ULL;

std::uint32_t label_index(const TrainedModel& model, std::string_view label) {
  auto it = std::lower_bound(model.labels.begin(), model.labels.end(), label);
  if (it == model.labels.end() || *it != label) {
    throw Error(ErrorCode::InvalidArgument, "model has no label '" + std::string(label) + "'");
  }
  return static_cast<std::uint32_t>(it - model.labels.begin());
}

bool majority_vacant(std::size_t occupied, std::size_t len) { return occupied * 2 <= len; }

}  // namespace

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Enrolling: return "Enrolling";
    case Phase::Authenticated: return "Authenticated";
    case Phase::Vacant: return "Vacant";
    case Phase::DeAuthenticated: return "DeAuthenticated";
  }
  return "?";
}

std::string_view to_string(DeauthReason reason) {
  switch (reason) {
    case DeauthReason::ImpostorSuspected: return "ImpostorSuspected";
    case DeauthReason::WalkedAway: return "WalkedAway";
    case DeauthReason::Manual: return "Manual";
  }
  return "?";
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Accepted: return "Accepted";
    case Verdict::Rejected: return "Rejected";
    case Verdict::ChairVacant: return "ChairVacant";
  }
  return "?";
}

void validate(const SessionConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (c.window_len == 0) fail("window_len must be positive");
  if (c.enroll_frames < c.window_len) fail("enroll_frames must be >= window_len");
  if (!(c.theta_accept > 0.0 && c.theta_accept <= 1.0)) fail("theta_accept must be in (0, 1]");
  if (c.retrain_interval_windows == 0) fail("retrain_interval_windows must be positive");
  if (c.tau_occupied <= 0) fail("tau_occupied must be positive");
}

Dataset prepare_background(const Dataset& background, const SessionConfig& config) {
  if (background.empty()) throw Error(ErrorCode::EmptyBackground, "background has no instances");
  if (background.feature_dim != kSensorCount) {
    throw Error(ErrorCode::DimensionMismatch, "background must hold 16-wide frame features");
  }
  std::vector<std::size_t> keep(background.size());
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  if (config.background_limit > 0 && keep.size() > config.background_limit) {
    Rng rng(derive_seed(config.seed, kBackgroundStream));
    rng.shuffle(std::span(keep));
    keep.resize(config.background_limit);
    std::sort(keep.begin(), keep.end());
  }
  Dataset out = background.subset(keep);
  std::fill(out.labels.begin(), out.labels.end(), std::string(kBackgroundLabel));
  return out;
}

Dataset authentication_dataset(std::span<const SensorFrame> genuine, const Dataset& background) {
  Dataset data(kSensorCount);
  for (const SensorFrame& f : genuine) data.add(normalize_frame(f), std::string(kGenuineLabel));
  for (std::size_t i = 0; i < background.size(); ++i) {
    data.add(background.row(i), std::string(kBackgroundLabel));
  }
  return data;
}

TrainedModel train_authentication_model(std::span<const SensorFrame> genuine,
                                        const Dataset& background, const SessionConfig& config) {
  return train(authentication_dataset(genuine, background), config.algorithm, config.seed);
}

SessionState new_session(const SessionConfig& config, const Dataset& background) {
  validate(config);
  SessionState state;
  state.config = config;
  state.background = std::make_shared<const Dataset>(prepare_background(background, config));
  state.training.reserve(config.enroll_frames);
  return state;
}

std::pair<SessionState, std::optional<AuthDecision>> ingest_frame(SessionState state,
                                                                  const SensorFrame& frame) {
  const SessionConfig& cfg = state.config;
  if (state.phase == Phase::DeAuthenticated) {
    throw Error(ErrorCode::SessionTerminated,
                "session ended (" + std::string(to_string(*state.reason)) + ")");
  }

  if (state.phase == Phase::Enrolling) {
    state.training.push_back(frame);
    if (state.training.size() >= cfg.enroll_frames) {
      state.model = std::make_shared<const TrainedModel>(
          train_authentication_model(state.training, *state.background, cfg));
      state.phase = Phase::Authenticated;
    }
    return {std::move(state), std::nullopt};
  }

  state.buffer.push_back(frame);
  if (state.buffer.size() < cfg.window_len) return {std::move(state), std::nullopt};

  AuthDecision decision;
  decision.window_index = state.next_window++;
  const std::size_t occupied = occupied_count(state.buffer, cfg.tau_occupied);

  if (majority_vacant(occupied, cfg.window_len)) {
    decision.verdict = Verdict::ChairVacant;
    ++state.vacant_windows;
    if (state.vacant_windows > cfg.vacancy_grace_windows) {
      state.phase = Phase::DeAuthenticated;
      state.reason = DeauthReason::WalkedAway;
    } else {
      state.phase = Phase::Vacant;
    }
  } else {
    const std::uint32_t genuine = label_index(*state.model, kGenuineLabel);
    std::size_t votes = 0;
    for (const SensorFrame& f : state.buffer) {
      if (!occupancy(f, cfg.tau_occupied)) continue;
      if (predict_index(*state.model, normalize_frame(f)) == genuine) ++votes;
    }
    decision.genuine_fraction = static_cast<double>(votes) / static_cast<double>(occupied);
    if (decision.genuine_fraction >= cfg.theta_accept) {
      decision.verdict = Verdict::Accepted;
      state.phase = Phase::Authenticated;
      state.vacant_windows = 0;
      state.training.insert(state.training.end(), state.buffer.begin(), state.buffer.end());
      ++state.accepted_windows;
      if (state.accepted_windows % cfg.retrain_interval_windows == 0) {
        state.model = std::make_shared<const TrainedModel>(
            train_authentication_model(state.training, *state.background, cfg));
      }
    } else {
      decision.verdict = Verdict::Rejected;
      state.phase = Phase::DeAuthenticated;
      state.reason = DeauthReason::ImpostorSuspected;
    }
  }
  state.buffer.clear();
  return {std::move(state), decision};
}

SessionState deauthenticate(SessionState state, DeauthReason reason) {
  if (state.phase != Phase::DeAuthenticated) {
    state.phase = Phase::DeAuthenticated;
    state.reason = reason;
  }
  state.buffer.clear();
  return state;
}

std::string format_decision(const AuthDecision& d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, ",%.4f", d.genuine_fraction);
  return std::to_string(d.window_index) + "," + std::string(to_string(d.verdict)) + buf;
}

std::string format_deauth(DeauthReason reason) {
  return "DEAUTH," + std::string(to_string(reason));
}

Identification identify(const Window& window, const TrainedModel& population,
                        const SessionConfig& config) {
  if (population.labels.empty()) throw Error(ErrorCode::InvalidArgument, "empty population");
  const std::size_t occupied = occupied_count(window.frames, config.tau_occupied);
  if (window.frames.empty() || majority_vacant(occupied, window.frames.size())) {
    throw Error(ErrorCode::WindowVacant, "window " + std::to_string(window.start_index) +
                                             " is mostly vacant");
  }
  std::vector<std::size_t> votes(population.labels.size(), 0);
  for (const SensorFrame& f : window.frames) {
    if (occupancy(f, config.tau_occupied)) ++votes[predict_index(population, normalize_frame(f))];
  }
  const auto best = std::max_element(votes.begin(), votes.end()) - votes.begin();
  return {population.labels[best],
          static_cast<double>(votes[best]) / static_cast<double>(occupied)};
}

TrainedModel train_identification_model(std::span<const SessionRecording> recordings,
                                        const AlgorithmSpec& algorithm, std::uint64_t seed) {
  Dataset data(kSensorCount);
  for (const SessionRecording& rec : recordings) {
    for (const SensorFrame& f : rec.frames) data.add(normalize_frame(f), rec.subject_id);
  }
  if (data.empty()) throw Error(ErrorCode::InvalidArgument, "no frames to train on");
  return train(data, algorithm, seed);
}

}  // namespace popa
