// Times each parallel kernel against its serial reference on a synthetic
// population and checks that both produce the same result.

#include <chrono>
#include <cstdio>
#include <functional>

#include "CLI11.hpp"
#include "popa/classify.hpp"
#include "popa/eval.hpp"
#include "popa/kernels.hpp"
#include "popa/synth.hpp"

using namespace popa;

namespace {

double best_seconds(int runs, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < runs; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    best = std::min(best, dt.count());
  }
  return best;
}

void row(const char* kernel, double serial, double parallel, bool same) {
  std::printf("%-22s %10.4f %10.4f %8.2fx  %s\n", kernel, serial, parallel, serial / parallel,
              same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial reference vs parallel kernel timings"};
  std::size_t subjects = 30;
  double duration_s = 300.0;
  std::size_t queries = 2000;
  std::size_t trees = 100;
  int jobs = 0;
  int runs = 3;
  app.add_option("--subjects", subjects, "Population size")->capture_default_str();
  app.add_option("--duration-s", duration_s, "Seconds recorded per subject")->capture_default_str();
  app.add_option("--queries", queries, "KNN query rows")->capture_default_str();
  app.add_option("--trees", trees, "Forest size")->capture_default_str();
  app.add_option("--jobs", jobs, "OpenMP threads (0 = runtime default)")->capture_default_str();
  app.add_option("--runs", runs, "Timed runs per kernel; the best is reported")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  set_parallel_jobs(jobs);

  PopulationParams pop;
  pop.n_subjects = subjects;
  std::vector<SessionRecording> recs;
  for (const auto& spec : generate_population(pop)) recs.push_back(simulate_session(spec, duration_s, 1));
  const Dataset data = build_dataset(recs, FeatureMode::Frame);
  queries = std::min(queries, data.size());
  const std::span<const double> qs(data.values.data(), queries * data.feature_dim);

  std::printf("%zu rows, %zu features, %d threads\n", data.size(), data.feature_dim, parallel_jobs());
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial s", "parallel s", "speedup");

  std::vector<std::vector<Neighbor>> ref, par;
  const double knn_serial = best_seconds(runs, [&] {
    ref = knn_search_batch(data.values, data.feature_dim, qs, 5, Execution::Serial);
  });
  const double knn_parallel = best_seconds(runs, [&] {
    par = knn_search_batch(data.values, data.feature_dim, qs, 5, Execution::Parallel);
  });
  row("knn batch (k=5)", knn_serial, knn_parallel, ref == par);

  ForestParams fp;
  fp.n_trees = trees;
  TrainedModel fs, fpar;
  const double forest_serial = best_seconds(runs, [&] { fs = train_forest(data, fp, 1, Execution::Serial); });
  const double forest_parallel = best_seconds(runs, [&] { fpar = train_forest(data, fp, 1, Execution::Parallel); });
  row("forest training", forest_serial, forest_parallel, fs == fpar);

  std::vector<std::uint32_t> ps, pp;
  const double pred_serial = best_seconds(runs, [&] { ps = predict_batch(fs, data, Execution::Serial); });
  const double pred_parallel = best_seconds(runs, [&] { pp = predict_batch(fs, data, Execution::Parallel); });
  row("forest prediction", pred_serial, pred_parallel, ps == pp);

  SvmParams sp;
  TrainedModel ss, spar;
  const double svm_serial = best_seconds(runs, [&] { ss = train_svm_ovo(data, sp, 1, Execution::Serial); });
  const double svm_parallel = best_seconds(runs, [&] { spar = train_svm_ovo(data, sp, 1, Execution::Parallel); });
  row("svm one-vs-one", svm_serial, svm_parallel, ss == spar);

  return ref == par && fs == fpar && ps == pp && ss == spar ? 0 : 1;
}
