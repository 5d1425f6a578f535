#include "curvescope/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "curvescope/errors.hpp"
#include "curvescope/gamfit.hpp"
#include "curvescope/io.hpp"
#include "curvescope/metrics.hpp"
#include "curvescope/ngram.hpp"
#include "curvescope/schedule.hpp"
#include "curvescope/synth.hpp"
#include "curvescope/threads.hpp"
#include "curvescope/util.hpp"

namespace curvescope::cli {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::string(buf);
}

// Writes to the given path, or stdout when the path is empty.
class OutStream {
public:
  explicit OutStream(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw DataError("cannot open for writing: " + path);
    }
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

private:
  std::ofstream file_;
};

gamfit::GamConfig gam_config_from(int n_splines, const std::string& lambda_csv) {
  gamfit::GamConfig cfg;
  cfg.n_splines = n_splines;
  if (!lambda_csv.empty()) {
    cfg.lambda_grid.clear();
    std::size_t start = 0;
    while (start <= lambda_csv.size()) {
      const std::size_t comma = lambda_csv.find(',', start);
      const std::string item = lambda_csv.substr(
          start, comma == std::string::npos ? comma : comma - start);
      if (!item.empty()) {
        try {
          cfg.lambda_grid.push_back(std::stod(item));
        } catch (...) {
          throw ConfigError("bad lambda value '" + item + "'");
        }
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cfg.lambda_grid.empty()) throw ConfigError("empty lambda grid");
  }
  return cfg;
}

void cmd_schedule(double s0, double s1, std::int64_t t1, bool list,
                  std::optional<double> count_at, std::optional<int> ordinal,
                  const std::string& out_path) {
  const schedule::ScheduleParams params{s0, s1, t1};
  OutStream out(out_path);
  if (count_at) {
    out.get() << fmt(schedule::checkpoint_count(params, *count_at)) << "\n";
    return;
  }
  if (ordinal) {
    const auto step = schedule::step_of_checkpoint(params, *ordinal);
    if (!step)
      throw ConfigError("checkpoint " + std::to_string(*ordinal) +
                        " is past the end of the schedule");
    out.get() << *step << "\n";
    return;
  }
  const auto checkpoints = schedule::generate_schedule(params);
  for (const auto& cp : checkpoints) {
    if (list)
      out.get() << cp.index << '\t' << cp.step << "\n";
    else
      out.get() << cp.step << "\n";
  }
}

void cmd_corpus_stats(const std::string& input, std::uint32_t vocab,
                      std::uint32_t seq_len, const std::string& out_path) {
  const auto corp = corpus::ingest_corpus(input, vocab, seq_len);
  OutStream out(out_path);
  out.get() << "# " << kVersion << "\ntoken_id\tcount\n";
  for (std::uint32_t t = 0; t < vocab; ++t)
    out.get() << t << '\t' << corp.stats.counts[t] << "\n";
}

void cmd_count_ngrams(const std::string& input, std::uint32_t vocab,
                      std::uint32_t seq_len, std::uint32_t order,
                      const std::string& out_path) {
  const auto corp = corpus::ingest_corpus(input, vocab, seq_len);
  const auto table = ngram::build(corp.store, order);
  table.save(out_path);
}

void cmd_score(const std::string& table_path, const std::string& queries_path,
               std::vector<std::uint32_t> orders, const std::string& out_path) {
  const auto table = ngram::NgramTable::load(table_path);
  if (orders.empty()) orders.push_back(table.max_order());
  std::ifstream in(queries_path);
  if (!in) throw DataError("cannot open: " + queries_path);
  OutStream out(out_path);
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') {
      out.get() << line << "\n";
      continue;
    }
    const auto fields = io::split_tsv(line);
    if (fields.size() < 2)
      throw DataError(queries_path + ":" + std::to_string(lineno) +
                      ": expected (context, target) columns");
    std::vector<corpus::TokenId> context;
    for (const auto& tok : io::split_ws(fields[0]))
      context.push_back(static_cast<corpus::TokenId>(std::stoul(tok)));
    const auto target = static_cast<corpus::TokenId>(std::stoul(fields[1]));
    out.get() << line;
    for (std::uint32_t order : orders)
      out.get() << '\t' << fmt(table.surprisal(context, target, order));
    out.get() << "\n";
  }
}

void cmd_synth(const std::string& plan_path, const std::string& out_pattern,
               std::uint32_t runs, std::uint64_t seed) {
  const KeyValues kv = KeyValues::parse_file(plan_path);
  synth::CohortPlan plan;
  plan.vocab_size = static_cast<std::uint32_t>(kv.integer_or("vocab_size", plan.vocab_size));
  plan.sequence_length = static_cast<std::uint32_t>(
      kv.integer_or("sequence_length", plan.sequence_length));
  plan.n_sequences =
      static_cast<std::uint64_t>(kv.integer_or("n_sequences", static_cast<std::int64_t>(plan.n_sequences)));
  plan.examples_per_sequence = static_cast<std::uint32_t>(
      kv.integer_or("examples_per_sequence", plan.examples_per_sequence));
  plan.zipf_exponent = kv.num_or("zipf_exponent", plan.zipf_exponent);
  plan.n_runs = runs;
  plan.schedule_params.s0 = kv.num_or("schedule.s0", plan.schedule_params.s0);
  plan.schedule_params.s1 = kv.num_or("schedule.s1", plan.schedule_params.s1);
  plan.schedule_params.t1 =
      kv.integer_or("schedule.t1", plan.schedule_params.t1);
  plan.floor_lo = kv.num_or("floor_lo", plan.floor_lo);
  plan.floor_hi = kv.num_or("floor_hi", plan.floor_hi);
  plan.midpoint_lo = kv.num_or("midpoint_lo", plan.midpoint_lo);
  plan.midpoint_hi = kv.num_or("midpoint_hi", plan.midpoint_hi);
  plan.slope = kv.num_or("slope", plan.slope);
  plan.noise_lo = kv.num_or("noise_lo", plan.noise_lo);
  plan.noise_hi = kv.num_or("noise_hi", plan.noise_hi);
  plan.spike_prob_lo = kv.num_or("spike_prob_lo", plan.spike_prob_lo);
  plan.spike_prob_hi = kv.num_or("spike_prob_hi", plan.spike_prob_hi);
  plan.spike_height = kv.num_or("spike_height", plan.spike_height);
  plan.spike_width = kv.num_or("spike_width", plan.spike_width);
  plan.spike_position = kv.num_or("spike_position", plan.spike_position);

  const std::size_t brace = out_pattern.find("{i}");
  if (runs > 1 && brace == std::string::npos)
    throw ConfigError("--out pattern needs '{i}' when --runs > 1");

  const synth::Cohort cohort = synth::generate_cohort(plan, seed);
  for (std::size_t r = 0; r < cohort.runs.size(); ++r) {
    std::string path = out_pattern;
    if (brace != std::string::npos)
      path = out_pattern.substr(0, brace) + std::to_string(r + 1) +
             out_pattern.substr(brace + 3);
    curves::write_curves(path, cohort.runs[r]);
  }
  const std::size_t slash = out_pattern.rfind('/');
  const std::string dir =
      slash == std::string::npos ? "." : out_pattern.substr(0, slash);
  corpus::write_cseq(dir + "/corpus.cseq", cohort.corpus.store);
  synth::write_synthetic_pos(dir + "/pos.tsv", cohort.truth.ids, seed);
  synth::write_truth_tsv(dir + "/truth.tsv", cohort.truth);
}

void cmd_ingest_curves(const std::string& input) {
  const auto m = curves::ingest_curves(input);
  float lo = 0.0f, hi = 0.0f;
  if (!m.values().empty()) {
    lo = hi = m.values()[0];
    for (float v : m.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  std::cout << "run_id\t" << m.run_id() << "\nexamples\t" << m.n_examples()
            << "\ncheckpoints\t" << m.n_checkpoints() << "\nfirst_step\t"
            << m.grid().steps.front() << "\nlast_step\t"
            << m.grid().steps.back() << "\nmin_surprisal\t" << fmt(lo)
            << "\nmax_surprisal\t" << fmt(hi) << "\nvalid\t1\n";
}

void cmd_fit_gams(const std::string& curves_path, const std::string& out_path,
                  int n_splines, const std::string& lambda_csv) {
  const auto run = curves::ingest_curves(curves_path);
  const auto cfg = gam_config_from(n_splines, lambda_csv);
  std::size_t skip = 0;
  const std::vector<double> xs = run.grid().log10_nonzero_steps(&skip);
  const gamfit::BatchGamFitter fitter(xs, cfg);
  std::vector<double> Y(run.n_examples() * xs.size());
  for (std::uint64_t e = 0; e < run.n_examples(); ++e) {
    const auto row = run.row(e);
    for (std::size_t c = 0; c < xs.size(); ++c)
      Y[e * xs.size() + c] = static_cast<double>(row[skip + c]);
  }
  gamfit::FittedCurveSet set;
  set.n_splines = cfg.n_splines;
  for (const auto& id : run.example_ids())
    set.example_ids.emplace_back(id.sequence_index, id.token_position);
  set.curves = fitter.fit_all(Y, run.n_examples());
  gamfit::write_gams(out_path, set);
}

void cmd_metrics(const std::string& curves_path, const std::string& gams_path,
                 std::int64_t t1, std::uint32_t vocab, double window_fraction,
                 const std::string& out_path) {
  const auto run = curves::ingest_curves(curves_path);
  const auto gams = gamfit::read_gams(gams_path);
  if (gams.curves.size() != run.n_examples())
    throw DataError("metrics: GAM file does not cover every example");
  const auto metric_rows =
      metrics::run_metrics(run, gams.curves, t1, vocab, window_fraction);
  MetricsTsv t;
  t.ids = run.example_ids();
  for (const auto& m : metric_rows) {
    t.final_surprisal.push_back(m.final_surprisal);
    t.var_steps.push_back(m.step_variability);
    t.aoa.push_back(m.aoa);
    t.forgettability.push_back(m.forgettability);
    t.never_acquired.push_back(m.never_acquired ? 1 : 0);
  }
  write_metrics_tsv(out_path, t);
}

void cmd_nn_rank(const std::string& run_a_path, const std::string& run_b_path,
                 bool fitted, const std::string& out_path, int n_splines,
                 const std::string& lambda_csv) {
  const auto a = curves::ingest_curves(run_a_path);
  const auto b = curves::ingest_curves(run_b_path);
  std::vector<double> ranks;
  if (!fitted) {
    ranks = curves::nearest_neighbor_ranks(a, b);
  } else {
    if (!(a.grid() == b.grid()))
      throw DataError("nn-rank --fitted: grid mismatch");
    const auto cfg = gam_config_from(n_splines, lambda_csv);
    std::size_t skip = 0;
    const std::vector<double> xs = a.grid().log10_nonzero_steps(&skip);
    const gamfit::BatchGamFitter fitter(xs, cfg);
    auto evaluate_all = [&](const curves::SurprisalMatrix& m,
                            const std::vector<curves::ExampleId>& order_ids) {
      std::vector<double> Y(order_ids.size() * xs.size());
      for (std::size_t e = 0; e < order_ids.size(); ++e) {
        const auto row = m.row(m.row_of(order_ids[e]));
        for (std::size_t c = 0; c < xs.size(); ++c)
          Y[e * xs.size() + c] = static_cast<double>(row[skip + c]);
      }
      const auto fits = fitter.fit_all(Y, order_ids.size());
      std::vector<std::vector<double>> evaluated(fits.size());
      parallel_for(static_cast<std::int64_t>(fits.size()), [&](std::int64_t i) {
        evaluated[static_cast<std::size_t>(i)] =
            fits[static_cast<std::size_t>(i)].evaluate(xs);
      });
      return evaluated;
    };
    const auto ea = evaluate_all(a, a.example_ids());
    const auto eb = evaluate_all(b, a.example_ids());
    ranks = curves::nearest_neighbor_ranks_values(ea, eb);
  }
  OutStream out(out_path);
  out.get() << "# " << kVersion << "\nexample_id\trank\n";
  for (std::size_t i = 0; i < ranks.size(); ++i)
    out.get() << a.example_ids()[i].to_string() << '\t' << fmt(ranks[i])
              << "\n";
}

void cmd_profiles(const std::vector<std::string>& run_paths,
                  const std::string& scores_path, const std::string& out_path) {
  if (run_paths.empty()) throw ConfigError("profiles: needs --runs");
  std::vector<curves::SurprisalMatrix> runs;
  for (const auto& p : run_paths) runs.push_back(curves::ingest_curves(p));
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (!(runs[r].grid() == runs[0].grid()))
      throw DataError("profiles: grid mismatch across runs");
    if (runs[r].example_ids() != runs[0].example_ids())
      throw DataError("profiles: example id mismatch across runs");
  }

  // n-gram scores joined by example id.
  std::ifstream in(scores_path);
  if (!in) throw DataError("cannot open: " + scores_path);
  std::unordered_map<curves::ExampleId, std::vector<double>,
                     curves::ExampleIdHash>
      by_id;
  std::string line;
  std::size_t n_orders = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = io::split_tsv(line);
    if (!header_seen) {
      header_seen = true;
      n_orders = f.size() - 1;
      continue;
    }
    std::vector<double> s;
    for (std::size_t k = 1; k < f.size(); ++k) s.push_back(std::stod(f[k]));
    if (s.size() != n_orders)
      throw DataError(scores_path + ": ragged n-gram score rows");
    by_id[curves::ExampleId::parse(f[0])] = std::move(s);
  }
  std::vector<std::vector<double>> scores(
      n_orders, std::vector<double>(runs[0].n_examples()));
  for (std::uint64_t e = 0; e < runs[0].n_examples(); ++e) {
    const auto it = by_id.find(runs[0].example_ids()[e]);
    if (it == by_id.end())
      throw DataError("profiles: n-gram scores missing example " +
                      runs[0].example_ids()[e].to_string());
    for (std::size_t k = 0; k < n_orders; ++k) scores[k][e] = it->second[k];
  }

  OutStream out(out_path);
  out.get() << "# " << kVersion << "\n";
  std::vector<metrics::AlignmentProfile> profs;
  for (const auto& run : runs)
    profs.push_back(metrics::ngram_alignment_profile(run, scores));
  for (std::size_t k = 0; k < n_orders; ++k) {
    std::vector<double> steps;
    for (const auto& p : profs)
      steps.push_back(static_cast<double>(p.argmax_step[k]));
    out.get() << "# argmax ngram-" << (k + 1) << " mean_step "
              << fmt(mean(steps)) << "\n";
  }
  out.get() << "step,series,r,std\n";
  const auto& grid_steps = runs[0].grid().steps;
  for (std::size_t c = 0; c < grid_steps.size(); ++c)
    for (std::size_t k = 0; k < n_orders; ++k) {
      std::vector<double> rs;
      for (const auto& p : profs) rs.push_back(p.r[k][c]);
      const double m = mean(rs);
      double var = 0.0;
      for (double v : rs) var += (v - m) * (v - m);
      out.get() << grid_steps[c] << ",ngram-" << (k + 1) << ',' << fmt(m)
                << ',' << fmt(std::sqrt(var / static_cast<double>(rs.size())))
                << "\n";
    }
  if (runs.size() >= 2) {
    std::vector<const curves::SurprisalMatrix*> ptrs;
    for (const auto& r : runs) ptrs.push_back(&r);
    const auto sim = metrics::checkpoint_similarity_profile(ptrs);
    for (std::size_t c = 0; c < grid_steps.size(); ++c)
      out.get() << grid_steps[c] << ",cross-run," << fmt(sim.mean_r[c]) << ','
                << fmt(sim.std_r[c]) << "\n";
  }
}

void cmd_features(const std::string& corpus_path, std::uint32_t vocab,
                  std::uint32_t seq_len, const std::string& table_path,
                  const std::string& pos_path, const std::string& curves_path,
                  const std::string& out_path, std::uint32_t window,
                  std::size_t top_k, int n_splines) {
  const auto corp = corpus::ingest_corpus(corpus_path, vocab, seq_len);
  const auto table = ngram::NgramTable::load(table_path);
  const auto run = curves::ingest_curves(curves_path);
  gamfit::GamConfig cfg;
  cfg.n_splines = n_splines;
  const auto diversity =
      features::contextual_diversity(corp.store, corp.stats, window, top_k, cfg);
  std::unordered_map<curves::ExampleId, features::PosAnnotation,
                     curves::ExampleIdHash>
      pos;
  if (!pos_path.empty()) pos = features::ingest_pos(pos_path);
  const auto ftable =
      features::compute_features(corp, table, run.example_ids(), diversity,
                                 pos_path.empty() ? nullptr : &pos);
  features::write_features_tsv(out_path, ftable, kVersion);
}

void cmd_regress(const std::string& features_path,
                 const std::string& metrics_path, const std::string& target,
                 const std::string& out_path) {
  const auto ftable = features::read_features_tsv(features_path);
  const auto mtable = read_metrics_tsv(metrics_path);
  const RegressionReport report =
      build_regression_report(ftable, mtable, target);
  write_regression_json(out_path, report);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"learning-curve analysis toolkit"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "cap worker threads");

  // schedule
  auto* sc = app.add_subcommand("schedule", "checkpoint schedule queries");
  double s0 = 0, s1 = 0;
  std::int64_t t1 = 0;
  bool sc_list = false;
  double sc_count = -1.0;
  int sc_n = -1;
  std::string sc_out;
  sc->add_option("--s0", s0)->required();
  sc->add_option("--s1", s1)->required();
  sc->add_option("--t1", t1)->required();
  sc->add_flag("--list", sc_list, "two-column TSV (index, step)");
  sc->add_option("--count", sc_count, "continuous checkpoint count at a step");
  sc->add_option("--n", sc_n, "step of the n-th checkpoint");
  sc->add_option("--out", sc_out);

  // corpus-stats
  auto* cs = app.add_subcommand("corpus-stats", "token frequency table");
  std::string cs_input, cs_out;
  std::uint32_t cs_vocab = 0, cs_seq_len = 128;
  cs->add_option("--input", cs_input)->required();
  cs->add_option("--vocab-size", cs_vocab)->required();
  cs->add_option("--seq-len", cs_seq_len);
  cs->add_option("--out", cs_out);

  // count-ngrams
  auto* cn = app.add_subcommand("count-ngrams", "build an n-gram table");
  std::string cn_input, cn_out;
  std::uint32_t cn_vocab = 0, cn_seq_len = 128, cn_order = 5;
  cn->add_option("--input", cn_input)->required();
  cn->add_option("--vocab-size", cn_vocab)->required();
  cn->add_option("--seq-len", cn_seq_len);
  cn->add_option("--order", cn_order);
  cn->add_option("--out", cn_out)->required();

  // score
  auto* sq = app.add_subcommand("score", "append backoff surprisals to queries");
  std::string sq_table, sq_queries, sq_out;
  std::vector<std::uint32_t> sq_orders;
  sq->add_option("--table", sq_table)->required();
  sq->add_option("--queries", sq_queries)->required();
  sq->add_option("--order", sq_orders, "orders to score (repeatable)");
  sq->add_option("--out", sq_out);

  // synth
  auto* sy = app.add_subcommand("synth", "generate a synthetic cohort");
  std::string sy_plan, sy_out;
  std::uint32_t sy_runs = 5;
  std::uint64_t sy_seed = 7;
  sy->add_option("--plan", sy_plan)->required();
  sy->add_option("--out", sy_out, "run path pattern with {i}")->required();
  sy->add_option("--runs", sy_runs);
  sy->add_option("--seed", sy_seed);

  // ingest-curves
  auto* ic = app.add_subcommand("ingest-curves", "validate a curve file");
  std::string ic_input;
  bool ic_validate = false;
  ic->add_option("--input", ic_input)->required();
  ic->add_flag("--validate", ic_validate);

  // fit-gams
  auto* fg = app.add_subcommand("fit-gams", "fit GAM curves for a run");
  std::string fg_curves, fg_out, fg_lambdas;
  int fg_splines = 25;
  fg->add_option("--curves", fg_curves)->required();
  fg->add_option("--out", fg_out)->required();
  fg->add_option("--n-splines", fg_splines);
  fg->add_option("--lambda-grid", fg_lambdas, "comma-separated values");

  // metrics
  auto* mx = app.add_subcommand("metrics", "within-run learning curve metrics");
  std::string mx_curves, mx_gams, mx_out;
  std::int64_t mx_t1 = 0;
  std::uint32_t mx_vocab = 0;
  double mx_window = 0.25;
  mx->add_option("--curves", mx_curves)->required();
  mx->add_option("--gams", mx_gams)->required();
  mx->add_option("--t1", mx_t1)->required();
  mx->add_option("--vocab-size", mx_vocab)->required();
  mx->add_option("--window-fraction", mx_window);
  mx->add_option("--out", mx_out)->required();

  // profiles
  auto* pf = app.add_subcommand("profiles", "similarity and alignment profiles");
  std::vector<std::string> pf_runs;
  std::string pf_scores, pf_out;
  pf->add_option("--runs", pf_runs)->required()->expected(-1);
  pf->add_option("--ngram-scores", pf_scores)->required();
  pf->add_option("--out", pf_out);

  // nn-rank
  auto* nn = app.add_subcommand("nn-rank", "cross-run nearest-neighbor ranks");
  std::string nn_a, nn_b, nn_out, nn_lambdas;
  bool nn_fitted = false;
  int nn_splines = 25;
  nn->add_option("--run-a", nn_a)->required();
  nn->add_option("--run-b", nn_b)->required();
  nn->add_flag("--fitted", nn_fitted, "distances between fitted curves");
  nn->add_option("--n-splines", nn_splines);
  nn->add_option("--lambda-grid", nn_lambdas);
  nn->add_option("--out", nn_out);

  // features
  auto* ft = app.add_subcommand("features", "per-example predictors");
  std::string ft_corpus, ft_table, ft_pos, ft_curves, ft_out;
  std::uint32_t ft_vocab = 0, ft_seq_len = 128, ft_window = 30;
  std::size_t ft_top_k = 10000;
  int ft_splines = 25;
  ft->add_option("--corpus", ft_corpus)->required();
  ft->add_option("--vocab-size", ft_vocab)->required();
  ft->add_option("--seq-len", ft_seq_len);
  ft->add_option("--ngram-table", ft_table)->required();
  ft->add_option("--pos", ft_pos);
  ft->add_option("--curves", ft_curves)->required();
  ft->add_option("--window", ft_window);
  ft->add_option("--top-k", ft_top_k);
  ft->add_option("--n-splines", ft_splines);
  ft->add_option("--out", ft_out)->required();

  // regress
  auto* rg = app.add_subcommand("regress", "incremental regression report");
  std::string rg_features, rg_metrics, rg_target, rg_out;
  rg->add_option("--features", rg_features)->required();
  rg->add_option("--metrics", rg_metrics)->required();
  rg->add_option("--target", rg_target)->required();
  rg->add_option("--out", rg_out)->required();

  // pipeline / validate
  auto* pl = app.add_subcommand("pipeline", "run every stage end to end");
  std::string pl_config;
  pl->add_option("--config", pl_config)->required();
  auto* vd = app.add_subcommand("validate", "static config checks");
  std::string vd_config;
  vd->add_option("--config", vd_config)->required();

  std::vector<std::string> argv_storage;
  argv_storage.push_back("curvescope");
  for (const auto& a : args) argv_storage.push_back(a);
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (threads > 0) set_thread_cap(threads);
    if (sc->parsed())
      cmd_schedule(s0, s1, t1, sc_list,
                   sc->count("--count") ? std::optional<double>(sc_count)
                                        : std::nullopt,
                   sc->count("--n") ? std::optional<int>(sc_n) : std::nullopt,
                   sc_out);
    else if (cs->parsed())
      cmd_corpus_stats(cs_input, cs_vocab, cs_seq_len, cs_out);
    else if (cn->parsed())
      cmd_count_ngrams(cn_input, cn_vocab, cn_seq_len, cn_order, cn_out);
    else if (sq->parsed())
      cmd_score(sq_table, sq_queries, sq_orders, sq_out);
    else if (sy->parsed())
      cmd_synth(sy_plan, sy_out, sy_runs, sy_seed);
    else if (ic->parsed())
      cmd_ingest_curves(ic_input);
    else if (fg->parsed())
      cmd_fit_gams(fg_curves, fg_out, fg_splines, fg_lambdas);
    else if (mx->parsed())
      cmd_metrics(mx_curves, mx_gams, mx_t1, mx_vocab, mx_window, mx_out);
    else if (pf->parsed())
      cmd_profiles(pf_runs, pf_scores, pf_out);
    else if (nn->parsed())
      cmd_nn_rank(nn_a, nn_b, nn_fitted, nn_out, nn_splines, nn_lambdas);
    else if (ft->parsed())
      cmd_features(ft_corpus, ft_vocab, ft_seq_len, ft_table, ft_pos,
                   ft_curves, ft_out, ft_window, ft_top_k, ft_splines);
    else if (rg->parsed())
      cmd_regress(rg_features, rg_metrics, rg_target, rg_out);
    else if (pl->parsed())
      run_pipeline(PipelineConfig::from_file(pl_config));
    else if (vd->parsed()) {
      const auto errors = validate_config(PipelineConfig::from_file(vd_config));
      if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "error: " << e << "\n";
        return kExitConfig;
      }
      std::cout << "ok\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace curvescope::cli
