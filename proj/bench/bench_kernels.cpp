// Compares the serial reference kernels against their OpenMP counterparts on
// synthetic workloads and prints one speedup row per kernel.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "curvescope/corpus.hpp"
#include "curvescope/curves.hpp"
#include "curvescope/gamfit.hpp"
#include "curvescope/ngram.hpp"
#include "curvescope/rng.hpp"
#include "curvescope/schedule.hpp"
#include "curvescope/synth.hpp"
#include "curvescope/threads.hpp"

using namespace curvescope;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename Fn>
double time_best_of(int repeats, Fn&& fn) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const double t0 = now_seconds();
    fn();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

void report(const char* kernel, double serial_s, double parallel_s) {
  std::printf("%-28s serial %8.3f ms   omp(%d) %8.3f ms   speedup %.2fx\n",
              kernel, serial_s * 1e3, thread_cap(), parallel_s * 1e3,
              serial_s / parallel_s);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) set_thread_cap(std::stoi(argv[1]));
  std::printf("worker cap: %d\n", thread_cap());

  // Shared synthetic inputs.
  synth::CohortPlan plan;
  plan.vocab_size = 1000;
  plan.sequence_length = 128;
  plan.n_sequences = 400;
  plan.examples_per_sequence = 8;
  plan.n_runs = 2;
  const auto cohort = synth::generate_cohort(plan, 99);
  const auto& store = cohort.corpus.store;


  // Token tally.
  {
    const int cap = thread_cap();
    set_thread_cap(1);
    const double serial =
        time_best_of(5, [&] { corpus::tally_counts_serial(store, 1000); });
    set_thread_cap(cap);
    const double parallel =
        time_best_of(5, [&] { corpus::tally_counts(store, 1000); });
    report("token tally", serial, parallel);
  }

  // N-gram counting.
  {
    const double serial =
        time_best_of(3, [&] { ngram::build_serial(store, 5); });
    const double parallel = time_best_of(3, [&] { ngram::build(store, 5); });
    report("ngram count (order 5)", serial, parallel);
  }

  // Batch GAM fitting.
  {
    std::size_t skip = 0;
    const auto xs = cohort.grid.log10_nonzero_steps(&skip);
    const std::size_t n = cohort.runs[0].n_examples();
    std::vector<double> Y(n * xs.size());
    for (std::size_t e = 0; e < n; ++e) {
      const auto row = cohort.runs[0].row(e);
      for (std::size_t c = 0; c < xs.size(); ++c)
        Y[e * xs.size() + c] = static_cast<double>(row[skip + c]);
    }
    const gamfit::BatchGamFitter fitter(xs);
    const double serial =
        time_best_of(3, [&] { fitter.fit_all_serial(Y, n); });
    const double parallel = time_best_of(3, [&] { fitter.fit_all(Y, n); });
    report("GAM batch fit", serial, parallel);
  }

  // Nearest-neighbor rank scan.
  {
    const auto& a = cohort.runs[0];
    const auto& b = cohort.runs[1];
    const double serial =
        time_best_of(3, [&] { curves::nearest_neighbor_ranks_serial(a, b); });
    const double parallel =
        time_best_of(3, [&] { curves::nearest_neighbor_ranks(a, b); });
    report("nn-rank scan", serial, parallel);
  }
  return 0;
}
