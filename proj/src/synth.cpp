#include "popa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "popa/error.hpp"
#include "popa/rng.hpp"
#include "text_util.hpp"

namespace popa {

namespace {

constexpr std::uint64_t kDriftStream = 0xD81F7ULL;
constexpr double kFramePeriodS = 0.5;
constexpr double kDwellFactorMax = 1.25;  // rescale in [1/1.25, 1.25] = [0.8, 1.25]
constexpr double kDwellFullDrift = 100.0;  // drift (counts) at which the full rescale range applies

std::string subject_label(int index, int count) {
  const int width = count >= 1000 ? 4 : count >= 100 ? 3 : 2;
  std::string digits = std::to_string(index + 1);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, width - digits.size(), '0');
  return "s" + digits;
}

std::uint16_t to_reading(double value) {
  return static_cast<std::uint16_t>(std::round(std::clamp(value, 0.0, double(kMaxReading))));
}

}  // namespace

void validate(const SyntheticSubjectSpec& spec) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (spec.postures.empty()) fail("spec needs at least one posture");
  if (!(spec.shift_duration_s >= 0.0)) fail("shift_duration_s must be >= 0");
  if (!(spec.dwell_mean_s > spec.shift_duration_s)) fail("dwell_mean_s must exceed shift_duration_s");
  if (!(spec.noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  if (!(spec.weight_scale > 0.0)) fail("weight_scale must be > 0");
  for (double b : spec.baseline) {
    if (!std::isfinite(b)) fail("baseline must be finite");
  }
  for (const auto& p : spec.postures) {
    for (double v : p) {
      if (!std::isfinite(v)) fail("posture offsets must be finite");
    }
  }
}

void validate(const PopulationParams& p) {
  auto infeasible = [](const std::string& what) { throw Error(ErrorCode::InfeasibleRanges, what); };
  if (p.n_subjects < 1) throw Error(ErrorCode::InvalidArgument, "n_subjects must be >= 1");
  if (!(p.baseline_spread >= 0.0) || !(p.posture_sigma >= 0.0)) infeasible("spreads must be >= 0");
  if (!(p.weight_min > 0.0) || p.weight_min > p.weight_max) infeasible("bad weight_scale range");
  const double lo = p.baseline_mean - p.baseline_spread;
  const double hi = p.baseline_mean + p.baseline_spread;
  if (lo < 0.0 || hi > kMaxReading) infeasible("baseline range leaves [0, 1023]");
  if (p.weight_max * hi > kMaxReading) infeasible("weight-scaled baseline exceeds 1023");
  if (p.min_postures < 1 || p.min_postures > p.max_postures) infeasible("bad posture count range");
  if (!(p.shift_duration_s >= 0.0) || !(p.dwell_min_s > p.shift_duration_s) ||
      p.dwell_min_s > p.dwell_max_s) {
    infeasible("dwell range must exceed shift duration");
  }
  if (!(p.noise_min >= 0.0) || p.noise_min > p.noise_max) infeasible("bad noise range");
}

std::vector<SyntheticSubjectSpec> generate_population(const PopulationParams& params) {
  validate(params);
  std::vector<SyntheticSubjectSpec> specs;
  specs.reserve(params.n_subjects);
  for (int i = 0; i < params.n_subjects; ++i) {
    Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(i)));
    SyntheticSubjectSpec s;
    s.subject_id = subject_label(i, params.n_subjects);
    for (double& b : s.baseline) {
      b = rng.uniform(params.baseline_mean - params.baseline_spread,
                      params.baseline_mean + params.baseline_spread);
    }
    const int k = params.min_postures +
                  static_cast<int>(rng.below(params.max_postures - params.min_postures + 1));
    s.postures.assign(k, SensorVector{});
    for (int p = 1; p < k; ++p) {
      for (double& v : s.postures[p]) v = params.posture_sigma * rng.gaussian();
    }
    s.dwell_mean_s = rng.uniform(params.dwell_min_s, params.dwell_max_s);
    s.shift_duration_s = params.shift_duration_s;
    s.noise_sigma = rng.uniform(params.noise_min, params.noise_max);
    s.weight_scale = rng.uniform(params.weight_min, params.weight_max);
    s.seed = rng.next_u64();
    specs.push_back(std::move(s));
  }
  return specs;
}

double min_baseline_distance(const std::vector<SyntheticSubjectSpec>& specs) {
  if (specs.size() < 2) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < specs.size(); ++a) {
    for (std::size_t b = a + 1; b < specs.size(); ++b) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < kSensorCount; ++j) {
        const double d = specs[a].baseline[j] - specs[b].baseline[j];
        d2 += d * d;
      }
      best = std::min(best, std::sqrt(d2));
    }
  }
  return best;
}

SessionRecording simulate_session(const SyntheticSubjectSpec& spec, double duration_s,
                                  std::uint64_t session_seed, std::string session_id) {
  validate(spec);
  if (!(duration_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "duration must be positive");

  SessionRecording rec;
  rec.subject_id = spec.subject_id;
  rec.session_id = std::move(session_id);
  const auto n_frames = static_cast<std::size_t>(std::floor(duration_s / kFramePeriodS + 1e-9));
  rec.frames.resize(n_frames);

  Rng rng(derive_seed(spec.seed, session_seed));
  const std::size_t k = spec.postures.size();
  constexpr double kNever = std::numeric_limits<double>::infinity();

  std::size_t from = k > 1 ? rng.below(k) : 0;
  std::size_t to = from;
  double ramp_start = -kNever;
  double ramp_end = -kNever;
  double next_shift = k > 1 ? rng.exponential(spec.dwell_mean_s) : kNever;

  for (std::size_t i = 0; i < n_frames; ++i) {
    const double t = static_cast<double>(i) * kFramePeriodS;
    while (t >= next_shift) {
      from = to;
      std::size_t pick = rng.below(k - 1);
      to = pick >= from ? pick + 1 : pick;
      ramp_start = next_shift;
      ramp_end = ramp_start + spec.shift_duration_s;
      next_shift = ramp_end + rng.exponential(spec.dwell_mean_s);
    }

    const SensorVector& target = spec.postures[to];
    const SensorVector& source = spec.postures[from];
    const bool ramping = t < ramp_end && spec.shift_duration_s > 0.0;
    const double alpha = ramping ? (t - ramp_start) / spec.shift_duration_s : 1.0;

    SensorFrame& frame = rec.frames[i];
    frame.timestamp_ms = static_cast<std::int64_t>(i) * kFramePeriodMs;
    for (std::size_t j = 0; j < kSensorCount; ++j) {
      const double offset = ramping ? source[j] + alpha * (target[j] - source[j]) : target[j];
      const double mean = spec.weight_scale * (spec.baseline[j] + offset);
      frame.readings[j] = to_reading(mean + spec.noise_sigma * rng.gaussian());
    }
  }
  return rec;
}

SyntheticSubjectSpec apply_session_drift(const SyntheticSubjectSpec& spec, double drift_magnitude) {
  validate(spec);
  if (!(drift_magnitude >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "drift magnitude must be >= 0");
  }
  Rng rng(derive_seed(spec.seed, kDriftStream, spec.drift_epoch));
  SyntheticSubjectSpec out = spec;
  out.drift_epoch = spec.drift_epoch + 1;
  for (double& b : out.baseline) b += drift_magnitude * rng.gaussian();
  for (auto& p : out.postures) {
    for (double& v : p) v += drift_magnitude * rng.gaussian();
  }
  const double u = rng.uniform(-1.0, 1.0);
  const double strength = std::min(1.0, drift_magnitude / kDwellFullDrift);
  const double dwell = spec.dwell_mean_s * std::pow(kDwellFactorMax, u * strength);
  if (dwell > spec.shift_duration_s) out.dwell_mean_s = dwell;
  return out;
}

void write_spec(std::ostream& out, const SyntheticSubjectSpec& spec) {
  auto vec = [](const SensorVector& v) {
    std::string s;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (j) s += ',';
      s += text::format_double(v[j]);
    }
    return s;
  };
  out << kSpecMagic << '\n'
      << "subject_id=" << spec.subject_id << '\n'
      << "seed=" << spec.seed << '\n'
      << "drift_epoch=" << spec.drift_epoch << '\n'
      << "dwell_mean_s=" << text::format_double(spec.dwell_mean_s) << '\n'
      << "shift_duration_s=" << text::format_double(spec.shift_duration_s) << '\n'
      << "noise_sigma=" << text::format_double(spec.noise_sigma) << '\n'
      << "weight_scale=" << text::format_double(spec.weight_scale) << '\n'
      << "baseline=" << vec(spec.baseline) << '\n'
      << "postures=" << spec.postures.size() << '\n';
  for (std::size_t p = 0; p < spec.postures.size(); ++p) {
    out << "posture" << p << '=' << vec(spec.postures[p]) << '\n';
  }
}

std::string write_spec(const SyntheticSubjectSpec& spec) {
  std::ostringstream out;
  write_spec(out, spec);
  return out.str();
}

SyntheticSubjectSpec parse_spec(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kSpecMagic) {
    throw Error(ErrorCode::MalformedHeader, "expected '#popa-spec v1'", 1);
  }
  std::map<std::string, std::pair<std::string, std::size_t>> fields;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto kv = text::key_value(line);
    if (!kv) throw Error(ErrorCode::MalformedRow, "expected key=value", line_no);
    fields[std::string(kv->first)] = {std::string(kv->second), line_no};
  }

  auto get = [&](const std::string& key) -> const std::pair<std::string, std::size_t>& {
    auto it = fields.find(key);
    if (it == fields.end()) throw Error(ErrorCode::MalformedRow, "missing key " + key);
    return it->second;
  };
  auto num = [&](const std::string& key) {
    const auto& [value, at] = get(key);
    auto v = text::parse_double(value);
    if (!v) throw Error(ErrorCode::MalformedRow, "bad number for " + key, at);
    return *v;
  };
  auto vec = [&](const std::string& key) {
    const auto& [value, at] = get(key);
    auto parts = text::split(value, ',');
    if (parts.size() != kSensorCount) {
      throw Error(ErrorCode::MalformedRow, key + " needs 16 values", at);
    }
    SensorVector v{};
    for (std::size_t j = 0; j < kSensorCount; ++j) {
      auto d = text::parse_double(parts[j]);
      if (!d) throw Error(ErrorCode::MalformedRow, "bad number in " + key, at);
      v[j] = *d;
    }
    return v;
  };

  SyntheticSubjectSpec spec;
  spec.subject_id = get("subject_id").first;
  {
    const auto& [value, at] = get("seed");
    auto s = text::parse_int<std::uint64_t>(value);
    if (!s) throw Error(ErrorCode::MalformedRow, "bad seed", at);
    spec.seed = *s;
  }
  {
    const auto& [value, at] = get("drift_epoch");
    auto e = text::parse_int<std::uint32_t>(value);
    if (!e) throw Error(ErrorCode::MalformedRow, "bad drift_epoch", at);
    spec.drift_epoch = *e;
  }
  spec.dwell_mean_s = num("dwell_mean_s");
  spec.shift_duration_s = num("shift_duration_s");
  spec.noise_sigma = num("noise_sigma");
  spec.weight_scale = num("weight_scale");
  spec.baseline = vec("baseline");
  const auto& [count_text, count_line] = get("postures");
  auto count = text::parse_int<std::size_t>(count_text);
  if (!count || *count == 0) throw Error(ErrorCode::MalformedRow, "bad posture count", count_line);
  for (std::size_t p = 0; p < *count; ++p) spec.postures.push_back(vec("posture" + std::to_string(p)));
  validate(spec);
  return spec;
}

SyntheticSubjectSpec parse_spec(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_spec(in);
}

}  // namespace popa
