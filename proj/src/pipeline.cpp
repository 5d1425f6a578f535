#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "curvescope/cli.hpp"
#include "curvescope/errors.hpp"
#include "curvescope/gamfit.hpp"
#include "curvescope/io.hpp"
#include "curvescope/metrics.hpp"
#include "curvescope/ngram.hpp"
#include "curvescope/threads.hpp"

namespace curvescope::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

char fmt_buf[64];
std::string fmt(double v) {
  std::snprintf(fmt_buf, sizeof fmt_buf, "%.12g", v);
  return std::string(fmt_buf);
}

}  // namespace

KeyValues KeyValues::parse_text(const std::string& text,
                                const std::string& origin) {
  KeyValues kv;
  kv.origin_ = origin;
  std::size_t start = 0;
  std::uint64_t lineno = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::string line =
        text.substr(start, nl == std::string::npos ? nl : nl - start);
    start = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    kv.values_[key] = value;
  }
  return kv;
}

KeyValues KeyValues::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_text(text, path);
}

bool KeyValues::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string KeyValues::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError(origin_ + ": missing required key '" + key + "'");
  return it->second;
}

std::string KeyValues::str_or(const std::string& key,
                              const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValues::num(const std::string& key) const {
  try {
    return std::stod(str(key));
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number");
  }
}

double KeyValues::num_or(const std::string& key, double fallback) const {
  return has(key) ? num(key) : fallback;
}

std::int64_t KeyValues::integer(const std::string& key) const {
  const double v = num(key);
  return static_cast<std::int64_t>(v);
}

std::int64_t KeyValues::integer_or(const std::string& key,
                                   std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::vector<std::string> KeyValues::list(const std::string& key) const {
  std::vector<std::string> out;
  std::string v = str(key);
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t comma = v.find(',', start);
    const std::string item = trim(
        v.substr(start, comma == std::string::npos ? comma : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  const KeyValues kv = KeyValues::parse_file(path);
  PipelineConfig c;
  c.corpus_path = kv.str_or("corpus", "");
  if (kv.has("curves"))
    for (const auto& p : kv.list("curves")) c.curve_paths.push_back(p);
  c.pos_path = kv.str_or("pos", "");
  c.out_dir = kv.str_or("out_dir", "");
  c.vocab_size = static_cast<std::uint32_t>(kv.integer_or("vocab_size", 0));
  c.sequence_length =
      static_cast<std::uint32_t>(kv.integer_or("sequence_length", 128));
  c.ngram_order = static_cast<std::uint32_t>(kv.integer_or("ngram_order", 5));
  c.t1 = kv.integer_or("t1", 0);
  c.gam_n_splines = static_cast<int>(kv.integer_or("gam_n_splines", 25));
  if (kv.has("gam_lambda_grid"))
    for (const auto& s : kv.list("gam_lambda_grid"))
      c.gam_lambda_grid.push_back(std::stod(s));
  c.window_fraction = kv.num_or("window_fraction", 0.25);
  c.seed = static_cast<std::uint64_t>(kv.integer_or("seed", 7));
  c.threads = static_cast<int>(kv.integer_or("threads", 0));
  return c;
}

namespace {

struct CurveHeader {
  std::string run_id;
  std::vector<std::int64_t> steps;
  std::uint64_t n_examples = 0;
};

CurveHeader read_curve_header(const std::string& path) {
  io::BinaryReader r(path);
  r.expect_magic(curves::kCurveMagic);
  const std::uint32_t version = r.u32();
  if (version != 1)
    throw DataError(path + ": unsupported curve file version " +
                    std::to_string(version));
  CurveHeader h;
  h.run_id = r.str();
  const std::uint32_t n_cp = r.u32();
  h.n_examples = r.u64();
  h.steps.resize(n_cp);
  for (auto& s : h.steps) s = static_cast<std::int64_t>(r.u64());
  return h;
}

}  // namespace

std::vector<std::string> validate_config(const PipelineConfig& config) {
  std::vector<std::string> errors;
  auto err = [&](const std::string& m) { errors.push_back(m); };

  if (config.corpus_path.empty())
    err("missing key: corpus");
  else if (!io::file_exists(config.corpus_path))
    err("corpus file does not exist: " + config.corpus_path);
  if (config.curve_paths.empty()) err("missing key: curves");
  if (config.out_dir.empty()) err("missing key: out_dir");
  if (config.vocab_size < 2) err("vocab_size must be >= 2");
  if (config.sequence_length < 2) err("sequence_length must be >= 2");
  if (config.ngram_order < 1 || config.ngram_order > ngram::kMaxSupportedOrder)
    err("ngram_order must be in [1, " +
        std::to_string(ngram::kMaxSupportedOrder) + "]");
  if (!(config.window_fraction > 0.0 && config.window_fraction <= 1.0))
    err("window_fraction must be in (0, 1]");
  if (config.gam_n_splines < 3) err("gam_n_splines must be >= 3");
  if (!config.pos_path.empty() && !io::file_exists(config.pos_path))
    err("pos file does not exist: " + config.pos_path);

  std::vector<CurveHeader> headers;
  for (const auto& p : config.curve_paths) {
    if (!io::file_exists(p)) {
      err("curve file does not exist: " + p);
      continue;
    }
    try {
      headers.push_back(read_curve_header(p));
    } catch (const std::exception& e) {
      err(std::string("bad curve file header: ") + e.what());
    }
  }
  for (std::size_t i = 1; i < headers.size(); ++i)
    if (headers[i].steps != headers[0].steps)
      err("checkpoint grid mismatch between " + config.curve_paths[0] +
          " and " + config.curve_paths[i]);
  if (config.t1 > 0)
    for (std::size_t i = 0; i < headers.size(); ++i)
      if (!headers[i].steps.empty() && headers[i].steps.back() > config.t1)
        err("t1 smaller than the max step of " + config.curve_paths[i]);
  return errors;
}

void write_metrics_tsv(const std::string& path, const MetricsTsv& t) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  const bool with_var_runs = !t.var_runs.empty();
  out << "# " << kVersion << "\n";
  out << "example_id\tfinal_surprisal\tvar_steps\taoa\tforgettability"
         "\tnever_acquired_flag";
  if (with_var_runs) out << "\tvar_runs";
  out << "\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t.ids[i].to_string() << '\t' << fmt(t.final_surprisal[i]) << '\t'
        << fmt(t.var_steps[i]) << '\t' << fmt(t.aoa[i]) << '\t'
        << fmt(t.forgettability[i]) << '\t' << t.never_acquired[i];
    if (with_var_runs) out << '\t' << fmt(t.var_runs[i]);
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

MetricsTsv read_metrics_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  MetricsTsv t;
  std::string line;
  std::uint64_t lineno = 0;
  bool header_seen = false;
  bool with_var_runs = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = io::split_tsv(line);
    if (!header_seen) {
      header_seen = true;
      with_var_runs = f.size() == 7 && f[6] == "var_runs";
      continue;
    }
    if (f.size() != (with_var_runs ? 7u : 6u))
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": wrong column count");
    t.ids.push_back(curves::ExampleId::parse(f[0]));
    t.final_surprisal.push_back(std::stod(f[1]));
    t.var_steps.push_back(std::stod(f[2]));
    t.aoa.push_back(std::stod(f[3]));
    t.forgettability.push_back(std::stod(f[4]));
    t.never_acquired.push_back(std::stoi(f[5]));
    if (with_var_runs) t.var_runs.push_back(std::stod(f[6]));
  }
  return t;
}

namespace {

bool id_less(const curves::ExampleId& a, const curves::ExampleId& b) {
  if (a.sequence_index != b.sequence_index)
    return a.sequence_index < b.sequence_index;
  return a.token_position < b.token_position;
}

template <typename T>
std::vector<T> permuted(const std::vector<T>& v,
                        const std::vector<std::size_t>& order) {
  std::vector<T> out;
  out.reserve(v.size());
  for (std::size_t i : order) out.push_back(v[i]);
  return out;
}

std::vector<std::size_t> sort_order(const std::vector<curves::ExampleId>& ids) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return id_less(ids[a], ids[b]);
  });
  return order;
}

const char* const kContinuousNames[5] = {"log_freq", "fg_resid", "ctx_loglen",
                                         "ctx_logprob", "div_resid"};

}  // namespace

RegressionReport build_regression_report(const features::FeatureTable& ft,
                                         const MetricsTsv& mt,
                                         const std::string& target) {
  if (ft.size() != mt.size() || ft.size() < 3)
    throw DataError("regress: features and metrics must cover the same examples");

  // Rows are sorted by example id before fitting.
  const auto f_order = sort_order(ft.ids);
  const auto m_order = sort_order(mt.ids);
  for (std::size_t i = 0; i < ft.size(); ++i)
    if (!(ft.ids[f_order[i]] == mt.ids[m_order[i]]))
      throw DataError("regress: features/metrics example ids do not match");

  std::vector<double> y;
  {
    const std::vector<double>* src = nullptr;
    if (target == "surprisal" || target == "final_surprisal")
      src = &mt.final_surprisal;
    else if (target == "var_steps")
      src = &mt.var_steps;
    else if (target == "aoa")
      src = &mt.aoa;
    else if (target == "forgettability")
      src = &mt.forgettability;
    else if (target == "var_runs")
      src = &mt.var_runs;
    else
      throw ConfigError("regress: unknown target '" + target + "'");
    if (src->empty())
      throw DataError("regress: metrics file lacks the '" + target +
                      "' column");
    for (std::size_t i : m_order) y.push_back((*src)[i]);
  }

  std::vector<std::vector<double>> cont(5);
  cont[0] = permuted(ft.log_freq, f_order);
  cont[1] = permuted(ft.fg_resid, f_order);
  cont[2] = permuted(ft.ctx_loglen, f_order);
  cont[3] = permuted(ft.ctx_logprob, f_order);
  cont[4] = permuted(ft.div_resid, f_order);
  features::clip_features(cont);

  const bool with_pos = !ft.pos.empty();
  std::vector<std::string> pos_tags, word_pos;
  if (with_pos) {
    pos_tags = permuted(ft.pos, f_order);
    word_pos = permuted(ft.word_pos, f_order);
  }

  // POS enters the ledger as one-hot columns against a reference tag (first
  // present in inventory order) plus word-position dummies against U.
  std::vector<std::vector<double>> pos_columns;
  if (with_pos) {
    std::vector<std::string> present;
    for (const auto& tag : features::upos_inventory())
      if (std::find(pos_tags.begin(), pos_tags.end(), tag) != pos_tags.end())
        present.push_back(tag);
    for (std::size_t t = 1; t < present.size(); ++t) {  // [0] is the reference
      std::vector<double> col(pos_tags.size(), 0.0);
      for (std::size_t i = 0; i < pos_tags.size(); ++i)
        if (pos_tags[i] == present[t]) col[i] = 1.0;
      pos_columns.push_back(std::move(col));
    }
    for (const std::string& wp : {"B", "I", "L"}) {
      if (std::find(word_pos.begin(), word_pos.end(), wp) == word_pos.end())
        continue;
      std::vector<double> col(word_pos.size(), 0.0);
      for (std::size_t i = 0; i < word_pos.size(); ++i)
        if (word_pos[i] == wp) col[i] = 1.0;
      pos_columns.push_back(std::move(col));
    }
  }

  std::vector<regress::PredictorGroup> groups;
  for (int c = 0; c < 5; ++c)
    groups.push_back({kContinuousNames[c], {cont[static_cast<std::size_t>(c)]}});
  if (!pos_columns.empty()) groups.push_back({"pos", pos_columns});

  RegressionReport report;
  report.target = target;
  report.ledger = regress::incremental_r2(groups, y);
  report.total_adjusted_r2 = report.ledger.back().adjusted_r2;

  for (int c = 0; c < 5; ++c) {
    std::vector<std::vector<double>> others;
    for (int k = 0; k < 5; ++k)
      if (k != c) others.push_back(cont[static_cast<std::size_t>(k)]);
    for (const auto& col : pos_columns) others.push_back(col);
    report.signs.emplace_back(
        kContinuousNames[c],
        regress::sign_triple(cont[static_cast<std::size_t>(c)], others, y,
                             cont[0]));
  }

  const std::vector<double> vifs = regress::vif(cont);
  for (int c = 0; c < 5; ++c)
    report.vifs.emplace_back(kContinuousNames[c],
                             vifs[static_cast<std::size_t>(c)]);

  // Likelihood-ratio (exact F) tests: each group against the previous model.
  {
    const Eigen::VectorXd yv =
        Eigen::Map<const Eigen::VectorXd>(y.data(),
                                          static_cast<Eigen::Index>(y.size()));
    std::vector<std::vector<double>> acc;
    Eigen::MatrixXd prev =
        Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(y.size()), 1);
    for (const auto& g : groups) {
      for (const auto& col : g.columns) acc.push_back(col);
      const Eigen::MatrixXd cur = regress::design_with_intercept(acc);
      const regress::NestedTest t = regress::nested_test(prev, cur, yv);
      report.nested_p.emplace_back(g.name, t.p_value);
      prev = cur;
    }
  }

  if (with_pos)
    report.pos = regress::pos_coefficients(y, cont, pos_tags, word_pos);
  return report;
}

void write_regression_json(const std::string& path, const RegressionReport& r) {
  nlohmann::json j;
  j["toolkit"] = kVersion;
  j["target"] = r.target;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < r.ledger.size(); ++i) {
    nlohmann::json row;
    row["predictor"] = r.ledger[i].name;
    row["r2"] = r.ledger[i].r2;
    row["adjusted_r2"] = r.ledger[i].adjusted_r2;
    row["delta_adjusted_r2"] = r.ledger[i].delta_adjusted_r2;
    if (i < r.nested_p.size()) row["lr_test_p"] = r.nested_p[i].second;
    for (const auto& [name, s] : r.signs) {
      if (name != r.ledger[i].name) continue;
      row["sign_full"] = std::string(1, s.full);
      row["sign_alone"] = std::string(1, s.alone);
      row["sign_alone_freq_resid"] = std::string(1, s.alone_freq_resid);
    }
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["total_adjusted_r2"] = r.total_adjusted_r2;
  nlohmann::json vifs;
  for (const auto& [name, v] : r.vifs)
    vifs[name] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf");
  j["vif"] = vifs;
  if (r.pos) {
    nlohmann::json pos;
    for (const auto& [tag, coef] : r.pos->pos) pos[tag] = coef;
    j["pos_coefficients"] = pos;
    nlohmann::json wp;
    for (const auto& [tag, coef] : r.pos->word_pos) wp[tag] = coef;
    j["word_pos_coefficients"] = wp;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw DataError("write failed: " + path);
}

namespace {

// Wraps a pipeline stage so failures name the stage and artifact.
template <typename Fn>
void stage(const std::string& name, const std::string& artifact, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError("stage " + name + " (" + artifact + "): " + e.what());
  } catch (const DataError& e) {
    throw DataError("stage " + name + " (" + artifact + "): " + e.what());
  } catch (const NumericError& e) {
    throw NumericError("stage " + name + " (" + artifact + "): " + e.what());
  } catch (const std::exception& e) {
    throw DataError("stage " + name + " (" + artifact + "): " + e.what());
  }
}

}  // namespace

void run_pipeline(const PipelineConfig& config) {
  {
    const auto errors = validate_config(config);
    if (!errors.empty()) {
      std::string all = "invalid pipeline config:";
      for (const auto& e : errors) all += "\n  - " + e;
      throw ConfigError(all);
    }
  }
  if (config.threads > 0) set_thread_cap(config.threads);
  std::filesystem::create_directories(config.out_dir);
  const auto out = [&](const std::string& name) {
    return config.out_dir + "/" + name;
  };

  // Ingest corpus and curves up front; every later stage reads from memory.
  corpus::Corpus corp{corpus::SequenceStore(1, {}), {}};
  stage("ingest-corpus", config.corpus_path, [&] {
    corp = corpus::ingest_corpus(config.corpus_path, config.vocab_size,
                                 config.sequence_length);
  });

  std::vector<curves::SurprisalMatrix> runs;
  stage("ingest-curves", config.curve_paths[0], [&] {
    for (const auto& p : config.curve_paths)
      runs.push_back(curves::ingest_curves(p));
    for (std::size_t r = 1; r < runs.size(); ++r) {
      if (!(runs[r].grid() == runs[0].grid()))
        throw DataError("grid mismatch across runs");
      if (runs[r].example_ids() != runs[0].example_ids())
        throw DataError("example id mismatch across runs");
    }
  });
  const std::uint64_t n_examples = runs[0].n_examples();

  // Canonical row order: ids sorted ascending.
  std::vector<curves::ExampleId> ids = runs[0].example_ids();
  std::vector<std::size_t> order = sort_order(ids);
  ids = permuted(ids, order);

  const std::int64_t t1 =
      config.t1 > 0 ? config.t1 : runs[0].grid().steps.back();

  ngram::NgramTable table(1, 1);
  stage("count-ngrams", out("ngram.bin"), [&] {
    table = ngram::build(corp.store, config.ngram_order);
    table.save(out("ngram.bin"));
  });

  // Per-example n-gram surprisals for orders 1..N.
  std::vector<std::vector<double>> ngram_scores(
      config.ngram_order, std::vector<double>(n_examples));
  stage("ngram-scores", out("ngram-scores.tsv"), [&] {
    parallel_for(static_cast<std::int64_t>(n_examples), [&](std::int64_t i) {
      const auto u = static_cast<std::size_t>(i);
      const auto ex = features::resolve_example(corp.store, ids[u]);
      for (std::uint32_t k = 1; k <= config.ngram_order; ++k)
        ngram_scores[k - 1][u] = table.surprisal(ex.context, ex.target, k);
    });
    std::ofstream f(out("ngram-scores.tsv"));
    f << "# " << kVersion << "\nexample_id";
    for (std::uint32_t k = 1; k <= config.ngram_order; ++k)
      f << "\tsurprisal_" << k << "gram";
    f << "\n";
    for (std::size_t u = 0; u < n_examples; ++u) {
      f << ids[u].to_string();
      for (std::uint32_t k = 1; k <= config.ngram_order; ++k)
        f << '\t' << fmt(ngram_scores[k - 1][u]);
      f << "\n";
    }
    if (!f) throw DataError("write failed");
  });

  // Fitted curves per run on the shared log10 grid.
  gamfit::GamConfig gam_config;
  gam_config.n_splines = config.gam_n_splines;
  if (!config.gam_lambda_grid.empty())
    gam_config.lambda_grid = config.gam_lambda_grid;
  std::size_t skip = 0;
  const std::vector<double> xs = runs[0].grid().log10_nonzero_steps(&skip);
  std::vector<std::vector<gamfit::FittedCurve>> fits(runs.size());
  stage("fit-gams", out("run1.gam"), [&] {
    const gamfit::BatchGamFitter fitter(xs, gam_config);
    for (std::size_t r = 0; r < runs.size(); ++r) {
      std::vector<double> Y(n_examples * xs.size());
      for (std::size_t u = 0; u < n_examples; ++u) {
        const auto row = runs[r].row(order[u]);
        for (std::size_t c = 0; c < xs.size(); ++c)
          Y[u * xs.size() + c] = static_cast<double>(row[skip + c]);
      }
      fits[r] = fitter.fit_all(Y, n_examples);
      gamfit::FittedCurveSet set;
      set.n_splines = gam_config.n_splines;
      for (const auto& id : ids)
        set.example_ids.emplace_back(id.sequence_index, id.token_position);
      set.curves = fits[r];
      gamfit::write_gams(out("run" + std::to_string(r + 1) + ".gam"), set);
    }
  });

  // Evaluated fitted curves, reused by metrics and regressions.
  std::vector<std::vector<std::vector<double>>> evaluated(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    evaluated[r].resize(n_examples);
    parallel_for(static_cast<std::int64_t>(n_examples), [&](std::int64_t u) {
      evaluated[r][static_cast<std::size_t>(u)] =
          fits[r][static_cast<std::size_t>(u)].evaluate(xs);
    });
  }

  MetricsTsv mean_table;
  metrics::CorrelationInputs corr_in;
  stage("metrics", out("metrics.tsv"), [&] {
    corr_in.per_run_metric.assign(4, {});
    std::vector<std::vector<int>> never(runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r) {
      std::vector<double> fs(n_examples), vs(n_examples), ao(n_examples),
          fg(n_examples);
      never[r].resize(n_examples);
      parallel_for(static_cast<std::int64_t>(n_examples), [&](std::int64_t i) {
        const auto u = static_cast<std::size_t>(i);
        const std::vector<double> raw = runs[r].row_as_double(order[u]);
        fs[u] = metrics::final_surprisal(raw, runs[r].grid(), t1,
                                         config.window_fraction);
        vs[u] = metrics::step_variability(raw, runs[r].grid(), t1,
                                          config.window_fraction);
        const auto a = metrics::aoa(fits[r][u], xs, config.vocab_size);
        ao[u] = a.aoa;
        never[r][u] = a.never_acquired ? 1 : 0;
        fg[u] = metrics::forgettability_of_values(evaluated[r][u]);
      });
      corr_in.per_run_metric[0].push_back(std::move(fs));
      corr_in.per_run_metric[1].push_back(std::move(vs));
      corr_in.per_run_metric[2].push_back(std::move(ao));
      corr_in.per_run_metric[3].push_back(std::move(fg));
    }

    if (runs.size() >= 2) {
      corr_in.run_variability_all.resize(n_examples);
      std::vector<std::vector<double>> views(runs.size());
      for (std::size_t u = 0; u < n_examples; ++u) {
        for (std::size_t r = 0; r < runs.size(); ++r)
          views[r] = evaluated[r][u];
        corr_in.run_variability_all[u] = metrics::run_variability(views);
      }
    }
    corr_in.evaluated = std::move(evaluated);

    mean_table.ids = ids;
    mean_table.final_surprisal =
        metrics::aggregate_over_runs(corr_in.per_run_metric[0]);
    mean_table.var_steps =
        metrics::aggregate_over_runs(corr_in.per_run_metric[1]);
    mean_table.aoa = metrics::aggregate_over_runs(corr_in.per_run_metric[2]);
    mean_table.forgettability =
        metrics::aggregate_over_runs(corr_in.per_run_metric[3]);
    mean_table.never_acquired.assign(n_examples, 0);
    for (std::size_t u = 0; u < n_examples; ++u)
      for (std::size_t r = 0; r < runs.size(); ++r)
        if (never[r][u]) mean_table.never_acquired[u] = 1;
    if (runs.size() >= 2) mean_table.var_runs = corr_in.run_variability_all;
    write_metrics_tsv(out("metrics.tsv"), mean_table);
  });

  stage("correlations", out("correlations.tsv"), [&] {
    if (runs.size() < 2) return;  // single-run invocations skip Table 2
    const auto corr = metrics::metric_correlations(corr_in);
    std::ofstream f(out("correlations.tsv"));
    f << "# " << kVersion << "\nmetric";
    for (const char* n : metrics::kMetricNames) f << '\t' << n;
    f << "\n";
    for (int a = 0; a < metrics::kNumMetrics; ++a) {
      f << metrics::kMetricNames[a];
      for (int b = 0; b < metrics::kNumMetrics; ++b)
        f << '\t' << fmt(corr[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]);
      f << "\n";
    }
    if (!f) throw DataError("write failed");
  });

  stage("profiles", out("profile.csv"), [&] {
    std::ofstream f(out("profile.csv"));
    f << "# " << kVersion << "\n";

    // Alignment: mean and spread across runs of the per-run correlation with
    // each n-gram order.
    std::vector<metrics::AlignmentProfile> profs;
    for (const auto& run : runs) {
      curves::SurprisalMatrix reordered(
          run.run_id(), run.grid(), ids, [&] {
            std::vector<float> v(n_examples * run.grid().size());
            for (std::size_t u = 0; u < n_examples; ++u) {
              const auto row = run.row(order[u]);
              std::copy(row.begin(), row.end(),
                        v.begin() + static_cast<std::ptrdiff_t>(
                                        u * run.grid().size()));
            }
            return v;
          }());
      profs.push_back(metrics::ngram_alignment_profile(reordered, ngram_scores));
    }
    for (std::uint32_t k = 0; k < config.ngram_order; ++k) {
      std::vector<double> steps_at_max;
      for (const auto& p : profs)
        steps_at_max.push_back(static_cast<double>(p.argmax_step[k]));
      f << "# argmax ngram-" << (k + 1) << " mean_step "
        << fmt(mean(steps_at_max)) << "\n";
    }
    f << "step,series,r,std\n";
    const auto& grid_steps = runs[0].grid().steps;
    for (std::size_t c = 0; c < grid_steps.size(); ++c) {
      for (std::uint32_t k = 0; k < config.ngram_order; ++k) {
        std::vector<double> rs;
        for (const auto& p : profs) rs.push_back(p.r[k][c]);
        const double m = mean(rs);
        double var = 0.0;
        for (double v : rs) var += (v - m) * (v - m);
        f << grid_steps[c] << ",ngram-" << (k + 1) << ',' << fmt(m) << ','
          << fmt(std::sqrt(var / static_cast<double>(rs.size()))) << "\n";
      }
    }
    if (runs.size() >= 2) {
      std::vector<const curves::SurprisalMatrix*> ptrs;
      for (const auto& r : runs) ptrs.push_back(&r);
      const auto sim = metrics::checkpoint_similarity_profile(ptrs);
      for (std::size_t c = 0; c < grid_steps.size(); ++c)
        f << grid_steps[c] << ",cross-run," << fmt(sim.mean_r[c]) << ','
          << fmt(sim.std_r[c]) << "\n";
    }
    if (!f) throw DataError("write failed");
  });

  features::FeatureTable ftable;
  stage("features", out("features.tsv"), [&] {
    const auto diversity = features::contextual_diversity(
        corp.store, corp.stats, 30, 10000, gam_config);
    std::unordered_map<curves::ExampleId, features::PosAnnotation,
                       curves::ExampleIdHash>
        pos;
    const bool with_pos = !config.pos_path.empty();
    if (with_pos) pos = features::ingest_pos(config.pos_path);
    ftable = features::compute_features(corp, table, ids, diversity,
                                        with_pos ? &pos : nullptr);
    features::write_features_tsv(out("features.tsv"), ftable, kVersion);
  });

  stage("regress", out("pos-coefs.tsv"), [&] {
    std::vector<std::string> targets = {"surprisal", "var_steps", "aoa",
                                        "forgettability"};
    if (!mean_table.var_runs.empty()) targets.push_back("var_runs");
    std::ofstream posf(out("pos-coefs.tsv"));
    posf << "# " << kVersion << "\nmetric\ttag\tcoefficient\n";
    for (const auto& target : targets) {
      const RegressionReport report =
          build_regression_report(ftable, mean_table, target);
      write_regression_json(out("regress-" + target + ".json"), report);
      if (report.pos) {
        for (const auto& [tag, coef] : report.pos->pos)
          posf << target << '\t' << tag << '\t' << fmt(coef) << "\n";
        for (const auto& [tag, coef] : report.pos->word_pos)
          posf << target << "\tword_pos:" << tag << '\t' << fmt(coef) << "\n";
      }
    }
    if (!posf) throw DataError("write failed");
  });
}

}  // namespace curvescope::cli
