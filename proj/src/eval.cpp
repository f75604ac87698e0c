#include "popa/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "popa/error.hpp"
#include "popa/rng.hpp"
#include "text_util.hpp"

namespace popa {

namespace {

constexpr std::uint64_t kModelSeedStream = 0x5EED0F01D5ULL;

}  // namespace

FoldPlan stratified_folds(std::span<const std::string> labels, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  std::vector<std::string> names(labels.begin(), labels.end());
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());

  std::vector<std::vector<std::uint32_t>> members(names.size());
  for (std::uint32_t i = 0; i < labels.size(); ++i) {
    const auto c = std::lower_bound(names.begin(), names.end(), labels[i]) - names.begin();
    members[c].push_back(i);
  }

  FoldPlan plan;
  plan.repeats = 1;
  plan.k = k;
  plan.assignment.assign(1, std::vector<std::uint32_t>(labels.size(), 0));
  Rng rng(seed);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < names.size(); ++c) {
    auto& idx = members[c];
    if (idx.size() < k) {
      throw Error(ErrorCode::ClassTooSmall, "class '" + names[c] + "' has " +
                                                std::to_string(idx.size()) + " instances, k=" +
                                                std::to_string(k));
    }
    rng.shuffle(std::span(idx));
    for (std::size_t p = 0; p < idx.size(); ++p) {
      plan.assignment[0][idx[p]] = static_cast<std::uint32_t>((offset + p) % k);
    }
    offset = (offset + idx.size()) % k;
  }
  return plan;
}

FoldPlan repeated_stratified_folds(std::span<const std::string> labels, std::size_t repeats,
                                   std::size_t k, std::uint64_t seed) {
  if (repeats == 0) throw Error(ErrorCode::InvalidArgument, "repeats must be positive");
  FoldPlan plan;
  plan.repeats = repeats;
  plan.k = k;
  for (std::size_t r = 0; r < repeats; ++r) {
    FoldPlan one = stratified_folds(labels, k, derive_seed(seed, r));
    plan.assignment.push_back(std::move(one.assignment.front()));
  }
  return plan;
}

void compute_metrics(EvalReport& report) {
  const std::size_t n = report.labels.size();
  std::uint64_t total = 0;
  std::vector<std::uint64_t> row(n, 0), col(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t p = 0; p < n; ++p) {
      const std::uint64_t c = report.confusion[a][p];
      row[a] += c;
      col[p] += c;
      total += c;
    }
  }
  report.subjects.clear();
  report.macro_tpr = report.macro_fpr = report.macro_fnr = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    SubjectMetrics m;
    m.subject = report.labels[s];
    const std::uint64_t diag = report.confusion[s][s];
    if (row[s] > 0) {
      m.tpr = static_cast<double>(diag) / static_cast<double>(row[s]);
      m.fnr = static_cast<double>(row[s] - diag) / static_cast<double>(row[s]);
    }
    const std::uint64_t negatives = total - row[s];
    if (negatives == 0) {
      m.fpr_undefined = true;
    } else {
      m.fpr = static_cast<double>(col[s] - diag) / static_cast<double>(negatives);
    }
    report.macro_tpr += m.tpr;
    report.macro_fpr += m.fpr;
    report.macro_fnr += m.fnr;
    report.subjects.push_back(std::move(m));
  }
  if (n > 0) {
    report.macro_tpr /= static_cast<double>(n);
    report.macro_fpr /= static_cast<double>(n);
    report.macro_fnr /= static_cast<double>(n);
  }
}

namespace {

// Adds model predictions (indices into model.labels) to report.confusion.
void accumulate(EvalReport& report, const TrainedModel& model,
                std::span<const std::string> actual, std::span<const std::uint32_t> predicted) {
  std::vector<std::size_t> to_report(model.labels.size());
  for (std::size_t c = 0; c < model.labels.size(); ++c) {
    to_report[c] = static_cast<std::size_t>(
        std::lower_bound(report.labels.begin(), report.labels.end(), model.labels[c]) -
        report.labels.begin());
  }
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const auto a = static_cast<std::size_t>(
        std::lower_bound(report.labels.begin(), report.labels.end(), actual[i]) -
        report.labels.begin());
    ++report.confusion[a][to_report[predicted[i]]];
  }
}

void init_report(EvalReport& report, std::vector<std::string> labels,
                 const AlgorithmSpec& algorithm, std::uint64_t seed) {
  report.labels = std::move(labels);
  report.confusion.assign(report.labels.size(),
                          std::vector<std::uint64_t>(report.labels.size(), 0));
  report.algorithm = algorithm.name();
  report.hyperparams = algorithm.hyperparams();
  report.seed = seed;
}

void add_recording(Dataset& data, const SessionRecording& rec, const std::string& label,
                   FeatureMode mode, std::size_t window_len) {
  if (mode == FeatureMode::Frame) {
    for (const SensorFrame& f : rec.frames) data.add(normalize_frame(f), label);
  } else {
    for (const Window& w : windows(rec.frames, window_len, window_len)) {
      data.add(window_features(w), label);
    }
  }
}

}  // namespace

EvalReport cross_validate(const Dataset& data, const AlgorithmSpec& algorithm,
                          const CvOptions& options) {
  if (options.k < 2) throw Error(ErrorCode::InvalidArgument, "cross-validation needs k >= 2");
  const FoldPlan plan =
      repeated_stratified_folds(data.labels, options.repeats, options.k, options.seed);

  EvalReport report;
  init_report(report, data.label_set(), algorithm, options.seed);
  report.protocol = "cv";
  report.repeats = options.repeats;
  report.folds = options.k;

  for (std::size_t r = 0; r < plan.repeats; ++r) {
    for (std::uint32_t f = 0; f < plan.k; ++f) {
      std::vector<std::size_t> train_idx, test_idx;
      for (std::size_t i = 0; i < data.size(); ++i) {
        (plan.assignment[r][i] == f ? test_idx : train_idx).push_back(i);
      }
      const Dataset train_set = data.subset(train_idx);
      const Dataset test_set = data.subset(test_idx);
      const std::uint64_t model_seed = derive_seed(options.seed ^ kModelSeedStream, r, f);
      const TrainedModel model = train(train_set, algorithm, model_seed, options.exec);
      const auto predicted = predict_batch(model, test_set, options.exec);
      accumulate(report, model, test_set.labels, predicted);
    }
  }
  compute_metrics(report);
  return report;
}

Dataset build_dataset(std::span<const SessionRecording> recordings, FeatureMode mode,
                      std::size_t window_len) {
  Dataset data(mode == FeatureMode::Frame ? kSensorCount : kWindowFeatureDim);
  for (const SessionRecording& rec : recordings) {
    add_recording(data, rec, rec.subject_id, mode, window_len);
  }
  return data;
}

EvalReport permanence_eval(const std::map<std::string, SessionRecording>& train_sessions,
                           const std::map<std::string, SessionRecording>& test_sessions,
                           const AlgorithmSpec& algorithm, std::uint64_t seed, FeatureMode mode,
                           std::size_t window_len, Execution exec) {
  const bool same_keys =
      train_sessions.size() == test_sessions.size() &&
      std::equal(train_sessions.begin(), train_sessions.end(), test_sessions.begin(),
                 [](const auto& a, const auto& b) { return a.first == b.first; });
  if (!same_keys) {
    throw Error(ErrorCode::SubjectMismatch, "train and test sessions cover different subjects");
  }
  if (train_sessions.empty()) throw Error(ErrorCode::InvalidArgument, "no subjects");

  const std::size_t dim = mode == FeatureMode::Frame ? kSensorCount : kWindowFeatureDim;
  Dataset train_set(dim), test_set(dim);
  std::vector<std::string> labels;
  for (const auto& [subject, rec] : train_sessions) {
    add_recording(train_set, rec, subject, mode, window_len);
    labels.push_back(subject);
  }
  for (const auto& [subject, rec] : test_sessions) {
    add_recording(test_set, rec, subject, mode, window_len);
  }

  EvalReport report;
  init_report(report, labels, algorithm, seed);
  report.protocol = "permanence";
  const TrainedModel model = train(train_set, algorithm, seed, exec);
  const auto predicted = predict_batch(model, test_set, exec);
  accumulate(report, model, test_set.labels, predicted);
  compute_metrics(report);
  return report;
}

void report_csv(std::ostream& out, const EvalReport& report) {
  char buf[128];
  out << "subject,tpr,fpr,fnr\n";
  for (const SubjectMetrics& m : report.subjects) {
    std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f\n", m.tpr, m.fpr, m.fnr);
    out << m.subject << buf;
  }
  std::snprintf(buf, sizeof buf, "MACRO,%.4f,%.4f,%.4f\n", report.macro_tpr, report.macro_fpr,
                report.macro_fnr);
  out << buf;
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  report_csv(out, report);
  return out.str();
}

std::vector<ReportRow> parse_report_csv(std::string_view content) {
  std::vector<ReportRow> rows;
  std::size_t line_no = 0;
  for (auto line : text::split(content, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "subject,tpr,fpr,fnr") {
        throw Error(ErrorCode::MalformedHeader, "expected report header", line_no);
      }
      continue;
    }
    auto parts = text::split(line, ',');
    if (parts.size() != 4) throw Error(ErrorCode::MalformedRow, "expected 4 columns", line_no);
    ReportRow row;
    row.subject = std::string(parts[0]);
    double* fields[] = {&row.tpr, &row.fpr, &row.fnr};
    for (int c = 0; c < 3; ++c) {
      auto v = text::parse_double(parts[c + 1]);
      if (!v) throw Error(ErrorCode::MalformedRow, "bad number", line_no);
      *fields[c] = *v;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace popa
