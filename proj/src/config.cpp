#include "popa/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "popa/error.hpp"
#include "text_util.hpp"

namespace popa {

std::string_view to_string(FeatureMode mode) {
  return mode == FeatureMode::Frame ? "frame" : "window";
}

FeatureMode feature_mode_from_string(std::string_view s) {
  if (s == "frame") return FeatureMode::Frame;
  if (s == "window") return FeatureMode::Window;
  throw Error(ErrorCode::BadConfig, "feature_mode must be frame or window");
}

KeyValues parse_key_values(std::string_view content) {
  KeyValues out;
  std::size_t line_no = 0;
  for (auto raw : text::split(content, '\n')) {
    ++line_no;
    auto line = raw.substr(0, raw.find('#'));
    line = text::trim(line);
    if (line.empty()) continue;
    auto kv = text::key_value(line);
    if (!kv || text::trim(kv->first).empty()) {
      throw Error(ErrorCode::BadConfig, "expected key=value", line_no);
    }
    out.emplace_back(std::string(text::trim(kv->first)), std::string(text::trim(kv->second)));
  }
  return out;
}

namespace {

template <typename T>
std::function<void(std::string_view)> integer(T& field) {
  return [&field](std::string_view v) {
    auto parsed = text::parse_int<T>(v);
    if (!parsed) throw Error(ErrorCode::BadConfig, "expected an integer, got '" + std::string(v) + "'");
    field = *parsed;
  };
}

std::function<void(std::string_view)> real(double& field) {
  return [&field](std::string_view v) {
    auto parsed = text::parse_double(v);
    if (!parsed) throw Error(ErrorCode::BadConfig, "expected a number, got '" + std::string(v) + "'");
    field = *parsed;
  };
}

}  // namespace

void ExperimentConfig::apply(const KeyValues& entries) {
  PopulationParams& pop = population;
  SessionConfig& s = session;
  const std::map<std::string, std::function<void(std::string_view)>> setters = {
      {"seed", integer(seed)},
      {"n_subjects", integer(pop.n_subjects)},
      {"baseline_mean", real(pop.baseline_mean)},
      {"baseline_spread", real(pop.baseline_spread)},
      {"posture_sigma", real(pop.posture_sigma)},
      {"min_postures", integer(pop.min_postures)},
      {"max_postures", integer(pop.max_postures)},
      {"dwell_min_s", real(pop.dwell_min_s)},
      {"dwell_max_s", real(pop.dwell_max_s)},
      {"shift_duration_s", real(pop.shift_duration_s)},
      {"noise_min", real(pop.noise_min)},
      {"noise_max", real(pop.noise_max)},
      {"weight_min", real(pop.weight_min)},
      {"weight_max", real(pop.weight_max)},
      {"algorithm",
       [this](std::string_view v) {
         try {
           const AlgorithmSpec named = AlgorithmSpec::from_name(v);
           session.algorithm.algorithm = named.algorithm;
           session.algorithm.k = named.k;
         } catch (const Error& e) {
           throw Error(ErrorCode::BadConfig, e.detail());
         }
       }},
      {"n_trees", integer(s.algorithm.forest.n_trees)},
      {"mtry", integer(s.algorithm.forest.mtry)},
      {"max_depth", integer(s.algorithm.forest.max_depth)},
      {"min_leaf", integer(s.algorithm.forest.min_leaf)},
      {"svm_lambda", real(s.algorithm.svm.lambda)},
      {"svm_epochs", integer(s.algorithm.svm.epochs)},
      {"feature_mode", [this](std::string_view v) { feature_mode = feature_mode_from_string(v); }},
      {"window_len", integer(s.window_len)},
      {"stride", integer(stride)},
      {"tau_occupied", integer(s.tau_occupied)},
      {"enroll_frames", integer(s.enroll_frames)},
      {"theta_accept", real(s.theta_accept)},
      {"vacancy_grace_windows", integer(s.vacancy_grace_windows)},
      {"retrain_interval_windows", integer(s.retrain_interval_windows)},
      {"background_limit", integer(s.background_limit)},
  };
  for (const auto& [key, value] : entries) {
    auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::BadConfig, "unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const Error& e) {
      throw Error(ErrorCode::BadConfig, key + ": " + e.detail());
    }
  }
  population.seed = seed;
  session.seed = seed;
}

KeyValues ExperimentConfig::to_key_values() const {
  const auto& pop = population;
  const auto& s = session;
  auto num = [](double v) { return text::format_double(v); };
  return {
      {"seed", std::to_string(seed)},
      {"n_subjects", std::to_string(pop.n_subjects)},
      {"baseline_mean", num(pop.baseline_mean)},
      {"baseline_spread", num(pop.baseline_spread)},
      {"posture_sigma", num(pop.posture_sigma)},
      {"min_postures", std::to_string(pop.min_postures)},
      {"max_postures", std::to_string(pop.max_postures)},
      {"dwell_min_s", num(pop.dwell_min_s)},
      {"dwell_max_s", num(pop.dwell_max_s)},
      {"shift_duration_s", num(pop.shift_duration_s)},
      {"noise_min", num(pop.noise_min)},
      {"noise_max", num(pop.noise_max)},
      {"weight_min", num(pop.weight_min)},
      {"weight_max", num(pop.weight_max)},
      {"algorithm", s.algorithm.name()},
      {"n_trees", std::to_string(s.algorithm.forest.n_trees)},
      {"mtry", std::to_string(s.algorithm.forest.mtry)},
      {"max_depth", std::to_string(s.algorithm.forest.max_depth)},
      {"min_leaf", std::to_string(s.algorithm.forest.min_leaf)},
      {"svm_lambda", num(s.algorithm.svm.lambda)},
      {"svm_epochs", std::to_string(s.algorithm.svm.epochs)},
      {"feature_mode", std::string(to_string(feature_mode))},
      {"window_len", std::to_string(s.window_len)},
      {"stride", std::to_string(stride)},
      {"tau_occupied", std::to_string(s.tau_occupied)},
      {"enroll_frames", std::to_string(s.enroll_frames)},
      {"theta_accept", num(s.theta_accept)},
      {"vacancy_grace_windows", std::to_string(s.vacancy_grace_windows)},
      {"retrain_interval_windows", std::to_string(s.retrain_interval_windows)},
      {"background_limit", std::to_string(s.background_limit)},
  };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ExperimentConfig cfg;
  cfg.apply(parse_key_values(buf.str()));
  return cfg;
}

}  // namespace popa
