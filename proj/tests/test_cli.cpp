#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "curvescope/cli.hpp"
#include "curvescope/io.hpp"
#include "curvescope/ngram.hpp"
#include "curvescope/schedule.hpp"
#include "curvescope/synth.hpp"

using namespace curvescope;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  const std::string dir = "/tmp/curvescope_cli_" + name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(std::initializer_list<std::string> args) {
  return cli::run(std::vector<std::string>(args));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    out.push_back(text.substr(start, nl - start));
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return out;
}

void write_plan(const std::string& path, const std::string& extra = "") {
  std::ofstream f(path);
  // Floors must stay below chance surprisal (log2 300 is about 8.2 bits).
  f << "vocab_size = 300\n"
       "sequence_length = 32\n"
       "n_sequences = 200\n"
       "examples_per_sequence = 3\n"
       "zipf_exponent = 1.05\n"
       "floor_lo = 2.0\n"
       "floor_hi = 7.0\n"
    << extra;
}

}  // namespace

TEST_CASE("cli: schedule output formats") {
  const std::string dir = fresh_dir("schedule");
  CHECK(run_cli({"schedule", "--s0", "100", "--s1", "25000", "--t1",
                 "1000000", "--list", "--out", dir + "/sched.tsv"}) == 0);
  const auto lines = lines_of(slurp(dir + "/sched.tsv"));
  REQUIRE(lines.size() == 222);
  CHECK(lines[0] == "0\t0");
  CHECK(lines[1] == "1\t101");
  CHECK(lines[221] == "221\t981536");

  CHECK(run_cli({"schedule", "--s0", "100", "--s1", "25000", "--t1",
                 "1000000", "--n", "2", "--out", dir + "/n2.txt"}) == 0);
  CHECK(lines_of(slurp(dir + "/n2.txt"))[0] == "205");

  // Past the end of the schedule.
  CHECK(run_cli({"schedule", "--s0", "100", "--s1", "25000", "--t1",
                 "1000000", "--n", "500", "--out", dir + "/n500.txt"}) == 2);
  // Bad params.
  CHECK(run_cli({"schedule", "--s0", "10", "--s1", "5", "--t1", "100",
                 "--out", dir + "/bad.txt"}) == 2);
}

TEST_CASE("cli: corpus-stats, count-ngrams, score") {
  const std::string dir = fresh_dir("ngram");
  {
    std::ofstream f(dir + "/corpus.tsv");
    f << "0 1 2 3\n0 1 2 4\n0 1 3 3\n";
  }
  CHECK(run_cli({"corpus-stats", "--input", dir + "/corpus.tsv",
                 "--vocab-size", "5", "--seq-len", "4", "--out",
                 dir + "/stats.tsv"}) == 0);
  const auto stats = lines_of(slurp(dir + "/stats.tsv"));
  CHECK(stats[2] == "0\t3");
  CHECK(stats[5] == "3\t3");

  CHECK(run_cli({"count-ngrams", "--input", dir + "/corpus.tsv",
                 "--vocab-size", "5", "--seq-len", "4", "--order", "3",
                 "--out", dir + "/table.bin"}) == 0);
  {
    std::ofstream f(dir + "/queries.tsv");
    f << "0 1\t2\n"    // P(2 | 0 1) = 2/3 at order 3
      << "\t0\n"       // unigram: P(0) = 3/12
      << "9 9\t1\n";   // unseen context backs off to the unigram
  }
  CHECK(run_cli({"score", "--table", dir + "/table.bin", "--queries",
                 dir + "/queries.tsv", "--order", "3", "--out",
                 dir + "/scored.tsv"}) == 0);
  const auto scored = lines_of(slurp(dir + "/scored.tsv"));
  const auto table = ngram::NgramTable::load(dir + "/table.bin");
  const std::vector<corpus::TokenId> ctx01 = {0, 1};
  CHECK(scored[0] ==
        "0 1\t2\t" + [&] {
          char buf[64];
          std::snprintf(buf, sizeof buf, "%.12g", table.surprisal(ctx01, 2, 3));
          return std::string(buf);
        }());
  CHECK(scored.size() == 3);
}

TEST_CASE("cli: synth emits runs, corpus, pos, truth") {
  const std::string dir = fresh_dir("synth");
  write_plan(dir + "/plan.kv");
  CHECK(run_cli({"synth", "--plan", dir + "/plan.kv", "--out",
                 dir + "/run{i}.scrv", "--runs", "2", "--seed", "5"}) == 0);
  CHECK(io::file_exists(dir + "/run1.scrv"));
  CHECK(io::file_exists(dir + "/run2.scrv"));
  CHECK(io::file_exists(dir + "/corpus.cseq"));
  CHECK(io::file_exists(dir + "/pos.tsv"));
  CHECK(io::file_exists(dir + "/truth.tsv"));

  const auto run = curves::ingest_curves(dir + "/run1.scrv");
  CHECK(run.n_examples() == 600);
  CHECK(run.grid().steps.size() == 222);

  // ingest-curves summary exits cleanly on valid input.
  CHECK(run_cli({"ingest-curves", "--input", dir + "/run1.scrv",
                 "--validate"}) == 0);
  // A garbage file is a data error.
  std::ofstream(dir + "/bad.scrv") << "not a curve file";
  CHECK(run_cli({"ingest-curves", "--input", dir + "/bad.scrv",
                 "--validate"}) == 3);
}

TEST_CASE("cli: fit-gams, metrics, nn-rank on a synthetic run") {
  const std::string dir = fresh_dir("fit");
  write_plan(dir + "/plan.kv");
  REQUIRE(run_cli({"synth", "--plan", dir + "/plan.kv", "--out",
                   dir + "/run{i}.scrv", "--runs", "2", "--seed", "9"}) == 0);

  CHECK(run_cli({"fit-gams", "--curves", dir + "/run1.scrv", "--out",
                 dir + "/run1.gam", "--n-splines", "10"}) == 0);
  const auto gams = gamfit::read_gams(dir + "/run1.gam");
  CHECK(gams.curves.size() == 600);
  CHECK(gams.n_splines == 10);

  CHECK(run_cli({"metrics", "--curves", dir + "/run1.scrv", "--gams",
                 dir + "/run1.gam", "--t1", "1000000", "--vocab-size", "300",
                 "--out", dir + "/metrics.tsv"}) == 0);
  const auto mt = cli::read_metrics_tsv(dir + "/metrics.tsv");
  CHECK(mt.size() == 600);
  CHECK(mt.var_runs.empty());
  for (double v : mt.final_surprisal) CHECK(v >= 0.0);

  CHECK(run_cli({"nn-rank", "--run-a", dir + "/run1.scrv", "--run-b",
                 dir + "/run2.scrv", "--out", dir + "/ranks.tsv"}) == 0);
  const auto ranks = lines_of(slurp(dir + "/ranks.tsv"));
  CHECK(ranks.size() == 602);  // version + header + 600 rows

  CHECK(run_cli({"nn-rank", "--run-a", dir + "/run1.scrv", "--run-b",
                 dir + "/run2.scrv", "--fitted", "--n-splines", "10",
                 "--out", dir + "/ranks-fitted.tsv"}) == 0);
  CHECK(lines_of(slurp(dir + "/ranks-fitted.tsv")).size() == 602);
}

TEST_CASE("cli: pipeline end to end, deterministic across reruns and threads") {
  const std::string dir = fresh_dir("pipeline");
  write_plan(dir + "/plan.kv");
  REQUIRE(run_cli({"synth", "--plan", dir + "/plan.kv", "--out",
                   dir + "/run{i}.scrv", "--runs", "3", "--seed", "13"}) == 0);

  auto write_config = [&](const std::string& path, const std::string& out_dir) {
    std::ofstream f(path);
    f << "corpus = " << dir << "/corpus.cseq\n"
      << "curves = " << dir << "/run1.scrv," << dir << "/run2.scrv," << dir
      << "/run3.scrv\n"
      << "pos = " << dir << "/pos.tsv\n"
      << "out_dir = " << out_dir << "\n"
      << "vocab_size = 300\n"
      << "sequence_length = 32\n"
      << "ngram_order = 5\n"
      << "gam_n_splines = 10\n"
      << "t1 = 1000000\n";
  };
  write_config(dir + "/config.kv", dir + "/out1");

  CHECK(run_cli({"validate", "--config", dir + "/config.kv"}) == 0);
  CHECK(run_cli({"pipeline", "--config", dir + "/config.kv"}) == 0);

  const std::vector<std::string> artifacts = {
      "metrics.tsv",          "correlations.tsv", "profile.csv",
      "features.tsv",         "pos-coefs.tsv",    "regress-surprisal.json",
      "regress-var_steps.json", "regress-aoa.json",
      "regress-forgettability.json", "regress-var_runs.json",
      "ngram.bin",            "ngram-scores.tsv", "run1.gam"};
  for (const auto& a : artifacts) CHECK(io::file_exists(dir + "/out1/" + a));

  // Rerun into a second directory: byte-identical artifacts.
  write_config(dir + "/config2.kv", dir + "/out2");
  CHECK(run_cli({"pipeline", "--config", dir + "/config2.kv"}) == 0);
  for (const auto& a : artifacts)
    CHECK(io::files_identical(dir + "/out1/" + a, dir + "/out2/" + a));

  // Thread cap must not change any byte.
  write_config(dir + "/config3.kv", dir + "/out3");
  CHECK(run_cli({"--threads", "2", "pipeline", "--config",
                 dir + "/config3.kv"}) == 0);
  for (const auto& a : artifacts)
    CHECK(io::files_identical(dir + "/out1/" + a, dir + "/out3/" + a));

  // The metrics table carries the run-mean var_runs column.
  const auto mt = cli::read_metrics_tsv(dir + "/out1/metrics.tsv");
  CHECK(mt.var_runs.size() == mt.size());

  // Every table leads with the toolkit version line.
  for (const auto& a : {"metrics.tsv", "correlations.tsv", "profile.csv",
                        "features.tsv", "pos-coefs.tsv"}) {
    const auto first = lines_of(slurp(dir + "/out1/" + a))[0];
    CHECK(first.find(cli::kVersion) != std::string::npos);
  }
}

TEST_CASE("cli: standalone profiles and regress consume pipeline artifacts") {
  const std::string dir = fresh_dir("standalone");
  write_plan(dir + "/plan.kv");
  REQUIRE(run_cli({"synth", "--plan", dir + "/plan.kv", "--out",
                   dir + "/run{i}.scrv", "--runs", "2", "--seed", "31"}) == 0);
  std::ofstream(dir + "/config.kv")
      << "corpus = " << dir << "/corpus.cseq\ncurves = " << dir
      << "/run1.scrv," << dir << "/run2.scrv\npos = " << dir
      << "/pos.tsv\nout_dir = " << dir << "/out\nvocab_size = 300\n"
      << "sequence_length = 32\ngam_n_splines = 10\nt1 = 1000000\n";
  REQUIRE(run_cli({"pipeline", "--config", dir + "/config.kv"}) == 0);

  CHECK(run_cli({"profiles", "--runs", dir + "/run1.scrv", dir + "/run2.scrv",
                 "--ngram-scores", dir + "/out/ngram-scores.tsv", "--out",
                 dir + "/profile.csv"}) == 0);
  const auto prof = slurp(dir + "/profile.csv");
  CHECK(prof.find("cross-run") != std::string::npos);
  CHECK(prof.find("ngram-5") != std::string::npos);

  CHECK(run_cli({"regress", "--features", dir + "/out/features.tsv",
                 "--metrics", dir + "/out/metrics.tsv", "--target", "aoa",
                 "--out", dir + "/aoa.json"}) == 0);
  const auto json_text = slurp(dir + "/aoa.json");
  CHECK(json_text.find("\"target\": \"aoa\"") != std::string::npos);
  CHECK(json_text.find("log_freq") != std::string::npos);
}

TEST_CASE("cli: validate reports aggregated config errors") {
  const std::string dir = fresh_dir("validate");
  std::ofstream(dir + "/empty.kv") << "# nothing\n";
  CHECK(run_cli({"validate", "--config", dir + "/empty.kv"}) == 2);

  // Grid mismatch across runs is caught before any compute.
  write_plan(dir + "/plan.kv");
  REQUIRE(run_cli({"synth", "--plan", dir + "/plan.kv", "--out",
                   dir + "/run{i}.scrv", "--runs", "1", "--seed", "1"}) == 0);
  write_plan(dir + "/plan2.kv", "schedule.t1 = 500000\n");
  fs::create_directories(dir + "/other");
  REQUIRE(run_cli({"synth", "--plan", dir + "/plan2.kv", "--out",
                   dir + "/other/run{i}.scrv", "--runs", "1", "--seed",
                   "1"}) == 0);
  std::ofstream(dir + "/config.kv")
      << "corpus = " << dir << "/corpus.cseq\ncurves = " << dir
      << "/run1.scrv," << dir << "/other/run1.scrv\nout_dir = " << dir
      << "/out\nvocab_size = 300\nsequence_length = 32\n";
  CHECK(run_cli({"validate", "--config", dir + "/config.kv"}) == 2);

  // Missing POS file with the POS stage requested fails before compute.
  std::ofstream(dir + "/config2.kv")
      << "corpus = " << dir << "/corpus.cseq\ncurves = " << dir
      << "/run1.scrv\npos = " << dir << "/missing.tsv\nout_dir = " << dir
      << "/out\nvocab_size = 300\nsequence_length = 32\n";
  CHECK(run_cli({"pipeline", "--config", dir + "/config2.kv"}) == 2);
}
