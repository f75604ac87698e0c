// popa: synthesis, enrollment, monitoring, identification and evaluation.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "popa/config.hpp"
#include "popa/error.hpp"
#include "popa/eval.hpp"
#include "popa/ingest.hpp"
#include "popa/kernels.hpp"
#include "popa/session.hpp"
#include "popa/store.hpp"
#include "popa/synth.hpp"

namespace fs = std::filesystem;
using namespace popa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitImpostor = 2;
constexpr int kExitWalkedAway = 3;
constexpr int kExitFailure = 4;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  int jobs = 1;
};

ExperimentConfig resolve_config(const Globals& g) {
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("POPA_CONFIG"); env != nullptr) path = env;
  }
  ExperimentConfig cfg;
  if (!path.empty()) cfg = load_config(path);
  if (g.seed) cfg.apply({{"seed", std::to_string(*g.seed)}});
  return cfg;
}

// SOURCE_DATE_EPOCH pins profile timestamps for reproducible files.
std::string timestamp() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    try {
      return iso8601(std::stoll(epoch));
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadConfig, "SOURCE_DATE_EPOCH is not an integer");
    }
  }
  return iso8601_now();
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
}

std::vector<SessionRecording> read_recordings(const fs::path& dir) {
  std::error_code ec;
  fs::directory_iterator it(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot list " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : it) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SessionRecording> out;
  for (const auto& f : files) {
    try {
      out.push_back(read_recording_file(f.string()));
    } catch (const Error& e) {
      throw Error(e.code(), f.string() + ": " + e.detail(), e.line());
    }
  }
  return out;
}

std::map<std::string, SessionRecording> session_map(const std::vector<SessionRecording>& recs,
                                                    const std::string& session) {
  std::map<std::string, SessionRecording> out;
  for (const auto& r : recs) {
    if (r.session_id != session) continue;
    if (!out.emplace(r.subject_id, r).second) {
      throw Error(ErrorCode::DuplicateSubject,
                  "subject '" + r.subject_id + "' has two recordings for session " + session);
    }
  }
  return out;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  int subjects = 30;
  int sessions = 1;
  double duration_s = 600.0;
  double drift = 0.0;
  std::string out;
};

int cmd_synth(const SynthArgs& a, ExperimentConfig cfg) {
  cfg.population.n_subjects = a.subjects;
  const auto specs = generate_population(cfg.population);
  const fs::path dir(a.out);
  ensure_directory(dir);
  std::size_t recordings = 0;
  for (const auto& spec : specs) {
    {
      std::ofstream out(dir / (spec.subject_id + ".spec"), std::ios::binary);
      out << write_spec(spec);
      if (!out) throw Error(ErrorCode::IoFailure, "cannot write spec for " + spec.subject_id);
    }
    SyntheticSubjectSpec current = spec;
    for (int m = 1; m <= a.sessions; ++m) {
      if (m > 1) current = apply_session_drift(current, a.drift);
      const auto rec = simulate_session(current, a.duration_s, static_cast<std::uint64_t>(m),
                                        std::to_string(m));
      write_recording_file((dir / (spec.subject_id + "_" + std::to_string(m) + ".csv")).string(), rec);
      ++recordings;
    }
  }
  std::cout << "wrote " << specs.size() << " specs and " << recordings << " recordings to "
            << dir.string() << '\n';
  return kExitOk;
}

// ---- enroll ---------------------------------------------------------------

struct EnrollArgs {
  std::string in;
  std::string profiles;
  bool force = false;
};

int cmd_enroll(const EnrollArgs& a, const ExperimentConfig& cfg) {
  SessionRecording rec = read_recording_file(a.in);
  const std::size_t need = cfg.session.enroll_frames;
  if (rec.frames.size() < need) {
    throw Error(ErrorCode::TooShort, a.in + " has " + std::to_string(rec.frames.size()) +
                                         " frames, enrollment needs " + std::to_string(need));
  }
  if (!valid_subject_id(rec.subject_id)) {
    throw Error(ErrorCode::InvalidSubjectId, "'" + rec.subject_id + "'");
  }
  rec.frames.resize(need);

  const fs::path dir(a.profiles);
  ensure_directory(dir);
  const fs::path target = dir / (rec.subject_id + std::string(kProfileExtension));
  SubjectProfile profile;
  profile.subject_id = rec.subject_id;
  profile.enrollment = std::move(rec);
  profile.model_seed = cfg.seed;
  profile.algorithm = cfg.session.algorithm;
  profile.updated = timestamp();
  profile.created = profile.updated;
  if (fs::exists(target)) {
    if (!a.force) {
      throw Error(ErrorCode::RefusingOverwrite,
                  target.string() + " exists; pass --force to re-enroll");
    }
    try {
      profile.created = load_profile(target).created;
    } catch (const Error&) {
      // Replacing a damaged profile: start a fresh history.
    }
  }
  std::cout << save_profile(profile, dir).string() << '\n';
  return kExitOk;
}

// ---- monitor --------------------------------------------------------------

struct MonitorArgs {
  std::string in;
  bool use_stdin = false;
  std::string profile;
  std::string background;
  std::size_t offset_frames = 0;
  bool realtime = false;
};

Dataset background_frames(const fs::path& dir, const std::string& exclude) {
  Dataset out(kSensorCount);
  for (const auto& [subject, path] : list_profiles(dir)) {
    if (subject == exclude) continue;
    for (const SensorFrame& f : load_profile(path).enrollment.frames) {
      out.add(normalize_frame(f), subject);
    }
  }
  return out;
}

int cmd_monitor(const MonitorArgs& a, const ExperimentConfig& cfg) {
  const SubjectProfile profile = load_profile(a.profile);
  SessionConfig sc = cfg.session;
  sc.enroll_frames = profile.enrollment.frames.size();
  sc.algorithm = profile.algorithm;
  sc.seed = profile.model_seed;
  SessionState state = new_session(sc, background_frames(a.background, profile.subject_id));
  for (const SensorFrame& f : profile.enrollment.frames) state = ingest_frame(std::move(state), f).first;

  std::size_t skipped = 0;
  auto consume = [&](const SensorFrame& f) {
    if (skipped < a.offset_frames) {
      ++skipped;
      return true;
    }
    auto [next, decision] = ingest_frame(std::move(state), f);
    state = std::move(next);
    if (decision) std::cout << format_decision(*decision) << std::endl;
    return state.phase != Phase::DeAuthenticated;
  };

  if (a.use_stdin) {
    CsvReader reader(std::cin);
    while (auto f = reader.next()) {
      if (!consume(*f)) break;
    }
  } else {
    SessionRecording rec = read_recording_file(a.in);
    // Drop the skipped frames up front so --realtime does not wait for them.
    const auto skip = static_cast<std::ptrdiff_t>(std::min(a.offset_frames, rec.frames.size()));
    rec.frames.erase(rec.frames.begin(), rec.frames.begin() + skip);
    skipped = a.offset_frames;
    Replay stream(rec, a.realtime ? Pace::RealTime : Pace::AsFast);
    while (auto f = stream.next()) {
      if (!consume(*f)) break;
    }
  }

  if (state.phase != Phase::DeAuthenticated) return kExitOk;
  std::cout << format_deauth(*state.reason) << std::endl;
  return *state.reason == DeauthReason::WalkedAway ? kExitWalkedAway : kExitImpostor;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::string data;
  std::string algorithm;
  std::size_t repeats = 10;
  std::size_t folds = 10;
  std::string mode = "cv";
  std::string out;
  std::string train_session = "1";
  std::string test_session = "2";
};

int cmd_evaluate(const EvaluateArgs& a, const ExperimentConfig& cfg) {
  AlgorithmSpec spec = cfg.session.algorithm;
  if (!a.algorithm.empty()) {
    const AlgorithmSpec named = AlgorithmSpec::from_name(a.algorithm);
    spec.algorithm = named.algorithm;
    spec.k = named.k;
  }
  const auto recordings = read_recordings(a.data);
  const std::size_t window_len = cfg.session.window_len;

  EvalReport report;
  if (a.mode == "cv") {
    std::vector<SessionRecording> chosen;
    for (const auto& r : recordings) {
      if (r.session_id == a.train_session) chosen.push_back(r);
    }
    if (chosen.empty()) {
      throw Error(ErrorCode::InvalidArgument,
                  "no session " + a.train_session + " recordings in " + a.data);
    }
    const Dataset data = build_dataset(chosen, cfg.feature_mode, window_len);
    report = cross_validate(data, spec, {a.repeats, a.folds, cfg.seed, Execution::Parallel});
  } else {
    const auto train = session_map(recordings, a.train_session);
    const auto test = session_map(recordings, a.test_session);
    report = permanence_eval(train, test, spec, cfg.seed, cfg.feature_mode, window_len);
  }

  const std::string csv = report_csv(report);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(a.out, std::ios::binary);
    out << csv;
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + a.out);
    char line[160];
    std::snprintf(line, sizeof line, "%s %s: macro tpr=%.4f fpr=%.4f fnr=%.4f\n",
                  report.algorithm.c_str(), report.protocol.c_str(), report.macro_tpr,
                  report.macro_fpr, report.macro_fnr);
    std::cout << line;
  }
  return kExitOk;
}

// ---- identify -------------------------------------------------------------

struct IdentifyArgs {
  std::string in;
  std::string profiles;
  std::size_t window = 0;  // 0 = config window_len
};

int cmd_identify(const IdentifyArgs& a, const ExperimentConfig& cfg) {
  std::vector<SessionRecording> enrolled;
  for (const auto& [subject, path] : list_profiles(a.profiles)) {
    enrolled.push_back(load_profile(path).enrollment);
  }
  if (enrolled.empty()) throw Error(ErrorCode::InvalidArgument, "no profiles in " + a.profiles);
  const TrainedModel model =
      train_identification_model(enrolled, cfg.session.algorithm, cfg.seed);

  const SessionRecording rec = read_recording_file(a.in);
  const std::size_t len = a.window > 0 ? a.window : cfg.session.window_len;
  std::size_t index = 0;
  for (const Window& w : windows(rec.frames, len, len)) {
    char conf[32];
    try {
      const Identification id = identify(w, model, cfg.session);
      std::snprintf(conf, sizeof conf, "%.4f", id.confidence);
      std::cout << index << ',' << id.subject_id << ',' << conf << '\n';
    } catch (const Error& e) {
      if (e.code() != ErrorCode::WindowVacant) throw;
      std::cout << index << ",VACANT,0.0000\n";
    }
    ++index;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous authentication from chair pressure sensors"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice (overrides the config file)");
  app.add_option("--config", g.config_path, "key=value config file (default: $POPA_CONFIG)");
  app.add_option("--jobs", g.jobs, "Worker threads for training and prediction")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic population and its recordings");
  s->add_option("--subjects", synth.subjects, "Number of subjects")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--sessions", synth.sessions, "Sessions per subject")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--duration-s", synth.duration_s, "Length of each session in seconds")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--drift", synth.drift, "Drift magnitude applied between consecutive sessions")->check(CLI::NonNegativeNumber)->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->required();

  EnrollArgs enroll;
  auto* e = app.add_subcommand("enroll", "Build a profile from the start of a recording");
  e->add_option("--in", enroll.in, "Recording CSV")->required()->check(CLI::ExistingFile);
  e->add_option("--profiles", enroll.profiles, "Profile directory")->required();
  e->add_flag("--force", enroll.force, "Replace an existing profile");

  MonitorArgs monitor;
  auto* m = app.add_subcommand("monitor", "Run continuous authentication over a frame stream");
  auto* m_in = m->add_option("--in", monitor.in, "Recording CSV to replay")->check(CLI::ExistingFile);
  auto* m_stdin = m->add_flag("--stdin", monitor.use_stdin, "Read the recording CSV from standard input");
  m_in->excludes(m_stdin);
  m->add_option("--profile", monitor.profile, "Profile of the claimed subject")->required()->check(CLI::ExistingFile);
  m->add_option("--background", monitor.background, "Profile directory supplying impostor examples")->required()->check(CLI::ExistingDirectory);
  m->add_option("--offset-frames", monitor.offset_frames, "Skip this many leading frames of the stream")->capture_default_str();
  m->add_flag("--realtime", monitor.realtime, "Replay --in at the recorded pace");

  EvaluateArgs evaluate;
  auto* v = app.add_subcommand("evaluate", "Cross-validation or cross-session evaluation");
  v->add_option("--data", evaluate.data, "Directory of recording CSVs")->required()->check(CLI::ExistingDirectory);
  v->add_option("--algorithm", evaluate.algorithm, "rf, knn1, knn3, knn5 or svm (default: config, else rf)")
      ->check(CLI::IsMember({"rf", "knn1", "knn3", "knn5", "svm"}));
  v->add_option("--repeats", evaluate.repeats, "Cross-validation repeats")->check(CLI::PositiveNumber)->capture_default_str();
  v->add_option("--folds", evaluate.folds, "Cross-validation folds")->check(CLI::Range(2, 1000))->capture_default_str();
  v->add_option("--mode", evaluate.mode, "cv or permanence")->check(CLI::IsMember({"cv", "permanence"}))->capture_default_str();
  v->add_option("--out", evaluate.out, "Report CSV path (default: standard output)");
  v->add_option("--train-session", evaluate.train_session, "Session used for cv, or for training in permanence")->capture_default_str();
  v->add_option("--test-session", evaluate.test_session, "Session scored in permanence mode")->capture_default_str();

  IdentifyArgs ident;
  auto* i = app.add_subcommand("identify", "Name the subject of each window of a recording");
  i->add_option("--in", ident.in, "Recording CSV")->required()->check(CLI::ExistingFile);
  i->add_option("--profiles", ident.profiles, "Profile directory")->required()->check(CLI::ExistingDirectory);
  i->add_option("--window", ident.window, "Window length in frames (default: config window_len)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
    if (m->parsed() && monitor.in.empty() && !monitor.use_stdin) {
      throw CLI::ValidationError("monitor", "one of --in or --stdin is required");
    }
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    const ExperimentConfig cfg = resolve_config(g);
    set_parallel_jobs(g.jobs);
    if (s->parsed()) return cmd_synth(synth, cfg);
    if (e->parsed()) return cmd_enroll(enroll, cfg);
    if (m->parsed()) return cmd_monitor(monitor, cfg);
    if (v->parsed()) return cmd_evaluate(evaluate, cfg);
    if (i->parsed()) return cmd_identify(ident, cfg);
  } catch (const Error& err) {
    std::cerr << "popa: " << err.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& err) {
    std::cerr << "popa: " << err.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
