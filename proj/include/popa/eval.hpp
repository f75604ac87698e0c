#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "popa/classify.hpp"
#include "popa/features.hpp"
#include "popa/frame.hpp"

namespace popa {

struct FoldPlan {
  std::size_t repeats = 1;
  std::size_t k = 10;
  // assignment[r][i] = fold of instance i in repeat r
  std::vector<std::vector<std::uint32_t>> assignment;
};

/// Seeded shuffle within each class, then round-robin over folds. Each class
/// continues the round-robin where the previous one stopped, so total fold
/// sizes stay balanced too.
FoldPlan stratified_folds(std::span<const std::string> labels, std::size_t k,
                          std::uint64_t seed);

/// `repeats` independent single-repeat plans; repeat r uses derive_seed(seed, r).
FoldPlan repeated_stratified_folds(std::span<const std::string> labels, std::size_t repeats,
                                   std::size_t k, std::uint64_t seed);

struct SubjectMetrics {
  std::string subject;
  double tpr = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  bool fpr_undefined = false;  // no negatives for this subject; fpr reported as 0
};

struct EvalReport {
  std::vector<std::string> labels;
  std::vector<std::vector<std::uint64_t>> confusion;  // [actual][predicted]
  std::vector<SubjectMetrics> subjects;
  double macro_tpr = 0.0;
  double macro_fpr = 0.0;
  double macro_fnr = 0.0;

  std::string protocol;  // "cv" or "permanence"
  std::string algorithm;
  std::vector<std::pair<std::string, std::string>> hyperparams;
  std::uint64_t seed = 0;
  std::size_t repeats = 0;
  std::size_t folds = 0;
};

/// Fills subjects and macro means from the confusion matrix.
void compute_metrics(EvalReport& report);

struct CvOptions {
  std::size_t repeats = 10;
  std::size_t k = 10;
  std::uint64_t seed = 1;
  Execution exec = Execution::Parallel;
};

EvalReport cross_validate(const Dataset& data, const AlgorithmSpec& algorithm,
                          const CvOptions& options);

/// Builds a dataset from recordings, labelled by subject id. Frame mode makes
/// one instance per frame; window mode one per non-overlapping window.
Dataset build_dataset(std::span<const SessionRecording> recordings, FeatureMode mode,
                      std::size_t window_len = kDefaultWindowLen);

/// Trains one identification model on the train sessions and scores every
/// frame of the test sessions. Keys are subject ids.
EvalReport permanence_eval(const std::map<std::string, SessionRecording>& train,
                           const std::map<std::string, SessionRecording>& test,
                           const AlgorithmSpec& algorithm, std::uint64_t seed,
                           FeatureMode mode = FeatureMode::Frame,
                           std::size_t window_len = kDefaultWindowLen,
                           Execution exec = Execution::Parallel);

/// `subject,tpr,fpr,fnr` header, one row per subject, then MACRO.
void report_csv(std::ostream& out, const EvalReport& report);
std::string report_csv(const EvalReport& report);

struct ReportRow {
  std::string subject;
  double tpr = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
};
std::vector<ReportRow> parse_report_csv(std::string_view text);

}  // namespace popa
