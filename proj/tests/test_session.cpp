#include <algorithm>

#include "popa/eval.hpp"
#include "popa/session.hpp"
#include "popa/synth.hpp"
#include "test_support.hpp"

using namespace popa;

namespace {

struct World {
  std::vector<SyntheticSubjectSpec> specs;
  Dataset background{kSensorCount};
  std::size_t genuine = 0;
  std::size_t impostor = 0;  // background subject farthest from the genuine one

  World() {
    specs = generate_population(PopulationParams{});
    std::vector<SessionRecording> others;
    double far = -1.0;
    for (std::size_t s = 1; s < specs.size(); ++s) {
      others.push_back(simulate_session(specs[s], 60, 1));
      double d = 0.0;
      for (std::size_t j = 0; j < kSensorCount; ++j) {
        const double diff = specs[s].baseline[j] - specs[genuine].baseline[j];
        d += diff * diff;
      }
      if (d > far) { far = d; impostor = s; }
    }
    background = build_dataset(others, FeatureMode::Frame);
  }

  std::vector<SensorFrame> frames(std::size_t subject, double seconds, std::uint64_t seed) const {
    return simulate_session(specs[subject], seconds, seed).frames;
  }
};

const World& world() {
  static const World w;
  return w;
}

// Default enrollment (a shorter one can miss a posture), smaller model.
SessionConfig small_config() {
  SessionConfig c;
  c.background_limit = 600;
  c.algorithm.forest.n_trees = 30;
  return c;
}

struct Run {
  SessionState state;
  std::vector<AuthDecision> decisions;
  std::vector<std::size_t> decided_at;  // frame count when each decision came out
  std::size_t fed = 0;

  void feed(std::span<const SensorFrame> frames) {
    for (const SensorFrame& f : frames) {
      if (state.phase == Phase::DeAuthenticated) return;
      auto [next, decision] = ingest_frame(std::move(state), f);
      state = std::move(next);
      ++fed;
      if (decision) {
        decisions.push_back(*decision);
        decided_at.push_back(fed);
      }
    }
  }
};

Run enrolled(const SessionConfig& config, std::uint64_t seed = 1) {
  const World& w = world();
  Run run{new_session(config, w.background), {}, {}, 0};
  run.feed(w.frames(w.genuine, static_cast<double>(config.enroll_frames) * 0.5, seed));
  return run;
}

// Frames of the genuine subject's enrollment session after the first
// `enroll_frames`.
std::vector<SensorFrame> continuation(const SessionConfig& config, double seconds) {
  const World& w = world();
  auto all = w.frames(w.genuine, static_cast<double>(config.enroll_frames) * 0.5 + seconds, 1);
  return {all.begin() + static_cast<std::ptrdiff_t>(config.enroll_frames), all.end()};
}

std::vector<SensorFrame> zeros(std::size_t n) {
  std::vector<SensorFrame> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(test::constant_frame(static_cast<std::int64_t>(i) * 500, 0));
  return out;
}

}  // namespace

TEST_CASE("new session") {
  const World& w = world();
  auto s = new_session(SessionConfig{}, w.background);
  CHECK(s.phase == Phase::Enrolling);
  CHECK(s.collected() == 0);
  CHECK(s.model == nullptr);
  CHECK(s.background->size() == 1200);
  for (const auto& l : s.background->labels) CHECK(l == kBackgroundLabel);

  CHECK_POPA_ERROR(new_session(SessionConfig{}, Dataset(kSensorCount)), ErrorCode::EmptyBackground);
  CHECK_POPA_ERROR(new_session(SessionConfig{}, Dataset(64)), ErrorCode::EmptyBackground);
  SessionConfig bad;
  bad.enroll_frames = 10;
  CHECK_POPA_ERROR(new_session(bad, w.background), ErrorCode::InvalidArgument);
  bad = SessionConfig{};
  bad.theta_accept = 0.0;
  CHECK_POPA_ERROR(new_session(bad, w.background), ErrorCode::InvalidArgument);
  bad = SessionConfig{};
  bad.retrain_interval_windows = 0;
  CHECK_POPA_ERROR(new_session(bad, w.background), ErrorCode::InvalidArgument);
}

TEST_CASE("background preparation is seeded") {
  const World& w = world();
  SessionConfig c;
  auto a = prepare_background(w.background, c);
  CHECK(a.values == prepare_background(w.background, c).values);
  c.seed = 2;
  CHECK(a.values != prepare_background(w.background, c).values);
  c.background_limit = 0;
  CHECK(prepare_background(w.background, c).size() == w.background.size());
}

TEST_CASE("default enrollment then genuine, vacant and impostor windows") {
  const World& w = world();
  Run run = enrolled(SessionConfig{});
  REQUIRE(run.state.phase == Phase::Authenticated);
  CHECK(run.decisions.empty());
  CHECK(run.state.collected() == 600);
  REQUIRE(run.state.model != nullptr);
  CHECK(run.state.model->labels == std::vector<std::string>{"background", "genuine"});

  SUBCASE("genuine window is accepted") {
    auto more = w.frames(w.genuine, 10, 7);
    run.feed(more);
    REQUIRE(run.decisions.size() == 1);
    CHECK(run.decisions[0].verdict == Verdict::Accepted);
    CHECK(run.decisions[0].genuine_fraction >= 0.5);
    CHECK(run.state.collected() == 620);
    CHECK(run.state.phase == Phase::Authenticated);
  }
  SUBCASE("vacant window walks away") {
    run.feed(zeros(20));
    REQUIRE(run.decisions.size() == 1);
    CHECK(run.decisions[0].verdict == Verdict::ChairVacant);
    CHECK(run.state.phase == Phase::DeAuthenticated);
    CHECK(run.state.reason == DeauthReason::WalkedAway);
  }
  SUBCASE("impostor window is rejected") {
    run.feed(w.frames(w.impostor, 10, 99));
    REQUIRE(run.decisions.size() == 1);
    CHECK(run.decisions[0].verdict == Verdict::Rejected);
    CHECK(run.decisions[0].genuine_fraction < 0.5);
    CHECK(run.state.reason == DeauthReason::ImpostorSuspected);
    CHECK(run.state.collected() == 600);
    CHECK_POPA_ERROR(ingest_frame(run.state, test::constant_frame(0, 500)), ErrorCode::SessionTerminated);
  }
}

TEST_CASE("decisions come only at window boundaries") {
  const World& w = world();
  SessionConfig c = small_config();
  Run run = enrolled(c);
  run.feed(w.frames(w.genuine, 60, 3));
  REQUIRE(!run.decisions.empty());
  for (std::size_t i = 0; i < run.decisions.size(); ++i) {
    CHECK(run.decisions[i].window_index == i);
    CHECK(run.decided_at[i] == c.enroll_frames + (i + 1) * c.window_len);
  }
  CHECK(run.state.buffer.size() < c.window_len);
}

TEST_CASE("training set grows by one window per accepted window") {
  const World& w = world();
  SessionConfig c = small_config();
  Run run = enrolled(c);
  auto stream = w.frames(w.genuine, 40, 5);
  std::vector<SensorFrame> before = run.state.training;
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < stream.size() && run.state.phase != Phase::DeAuthenticated; i += c.window_len) {
    run.feed(std::span(stream).subspan(i, c.window_len));
    if (run.decisions.back().verdict == Verdict::Accepted) ++accepted;
    REQUIRE(run.state.training.size() == c.enroll_frames + accepted * c.window_len);
    // Earlier frames are untouched.
    CHECK(std::equal(before.begin(), before.end(), run.state.training.begin(),
                     [](const SensorFrame& a, const SensorFrame& b) {
                       return a.timestamp_ms == b.timestamp_ms && a.readings == b.readings;
                     }));
    before = run.state.training;
  }
  CHECK(accepted > 0);
}

TEST_CASE("retraining follows the configured interval") {
  SessionConfig c = small_config();
  c.retrain_interval_windows = 3;
  Run run = enrolled(c);
  auto stream = continuation(c, 60);
  std::vector<std::shared_ptr<const TrainedModel>> models{run.state.model};
  for (std::size_t i = 0; i < 6 * c.window_len; i += c.window_len) {
    run.feed(std::span(stream).subspan(i, c.window_len));
    REQUIRE(run.decisions.back().verdict == Verdict::Accepted);
    models.push_back(run.state.model);
  }
  CHECK(models[1] == models[0]);
  CHECK(models[2] == models[0]);
  CHECK(models[3] != models[0]);
  CHECK(models[4] == models[3]);
  CHECK(models[6] != models[3]);
}

TEST_CASE("vacancy grace") {
  SessionConfig c = small_config();
  c.vacancy_grace_windows = 2;
  Run run = enrolled(c);
  run.feed(zeros(20));
  CHECK(run.state.phase == Phase::Vacant);
  CHECK(run.state.vacant_windows == 1);
  run.feed(zeros(20));
  CHECK(run.state.phase == Phase::Vacant);
  run.feed(zeros(20));
  CHECK(run.state.phase == Phase::DeAuthenticated);
  CHECK(run.state.reason == DeauthReason::WalkedAway);
  CHECK(run.decisions.size() == 3);

  SUBCASE("returning resets the count") {
    const World& w = world();
    Run back = enrolled(c);
    back.feed(zeros(20));
    back.feed(zeros(20));
    back.feed(w.frames(w.genuine, 10, 11));
    CHECK(back.state.phase == Phase::Authenticated);
    CHECK(back.state.vacant_windows == 0);
  }
}

TEST_CASE("a window with exactly half its frames occupied is vacant") {
  const World& w = world();
  SessionConfig c = small_config();
  Run run = enrolled(c);
  auto frames = w.frames(w.genuine, 5, 13);
  auto empty = zeros(10);
  frames.insert(frames.end(), empty.begin(), empty.end());
  run.feed(frames);
  REQUIRE(run.decisions.size() == 1);
  CHECK(run.decisions[0].verdict == Verdict::ChairVacant);
}

TEST_CASE("replaying a stream gives the same decision log") {
  const World& w = world();
  SessionConfig c = small_config();
  auto stream = w.frames(w.genuine, 360, 21);
  auto impostor = w.frames(w.impostor, 20, 22);
  stream.insert(stream.end(), impostor.begin(), impostor.end());
  auto log = [&] {
    Run run{new_session(c, w.background), {}, {}, 0};
    run.feed(stream);
    std::string out;
    for (const auto& d : run.decisions) out += format_decision(d) + "\n";
    if (run.state.reason) out += format_deauth(*run.state.reason) + "\n";
    return out;
  };
  const std::string a = log();
  CHECK(a == log());
  CHECK(a.find("DEAUTH,") != std::string::npos);
}

TEST_CASE("session copies are independent") {
  const World& w = world();
  SessionConfig c = small_config();
  Run run = enrolled(c);
  SessionState copy = run.state;
  run.feed(zeros(20));
  CHECK(run.state.phase == Phase::DeAuthenticated);
  CHECK(copy.phase == Phase::Authenticated);
  auto [next, decision] = ingest_frame(copy, w.frames(w.genuine, 1, 3)[0]);
  CHECK_FALSE(decision.has_value());
  CHECK(next.buffer.size() == 1);
  CHECK(copy.buffer.empty());
}

TEST_CASE("manual deauthentication") {
  const World& w = world();
  SessionConfig c = small_config();
  auto s = new_session(c, w.background);
  auto d = deauthenticate(s);
  CHECK(d.phase == Phase::DeAuthenticated);
  CHECK(d.reason == DeauthReason::Manual);
  auto again = deauthenticate(d, DeauthReason::ImpostorSuspected);
  CHECK(again.reason == DeauthReason::Manual);
  CHECK_POPA_ERROR(ingest_frame(again, test::constant_frame(0, 0)), ErrorCode::SessionTerminated);

  Run run = enrolled(c);
  auto done = deauthenticate(run.state);
  CHECK(done.reason == DeauthReason::Manual);
}

TEST_CASE("decision log lines") {
  CHECK(format_decision({3, 0.95, Verdict::Accepted}) == "3,Accepted,0.9500");
  CHECK(format_decision({0, 0.0, Verdict::ChairVacant}) == "0,ChairVacant,0.0000");
  CHECK(format_decision({12, 1.0 / 3.0, Verdict::Rejected}) == "12,Rejected,0.3333");
  CHECK(format_deauth(DeauthReason::WalkedAway) == "DEAUTH,WalkedAway");
}

TEST_CASE("identification") {
  const World& w = world();
  SessionConfig c;
  SUBCASE("single candidate") {
    std::vector<SessionRecording> one{simulate_session(w.specs[0], 30, 1)};
    auto model = train_identification_model(one, AlgorithmSpec::from_name("rf"), 1);
    auto frames = w.frames(3, 10, 2);
    auto id = identify(Window{0, frames}, model, c);
    CHECK(id.subject_id == w.specs[0].subject_id);
    CHECK(id.confidence == 1.0);
  }
  SUBCASE("separable population") {
    PopulationParams pop;
    pop.n_subjects = 5;
    pop.baseline_spread = 300.0;
    auto specs = generate_population(pop);
    std::vector<SessionRecording> recs;
    for (const auto& s : specs) recs.push_back(simulate_session(s, 60, 1));
    auto model = train_identification_model(recs, AlgorithmSpec::from_name("rf"), 1);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      auto frames = simulate_session(specs[s], 10, 50 + s).frames;
      auto id = identify(Window{0, frames}, model, c);
      CHECK(id.subject_id == specs[s].subject_id);
      CHECK(id.confidence > 0.5);
    }
  }
  SUBCASE("vacant window") {
    std::vector<SessionRecording> one{simulate_session(w.specs[0], 30, 1)};
    auto model = train_identification_model(one, AlgorithmSpec::from_name("knn1"), 1);
    auto frames = zeros(20);
    CHECK_POPA_ERROR(identify(Window{0, frames}, model, c), ErrorCode::WindowVacant);
  }
}
