#include "curvescope/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "curvescope/errors.hpp"
#include "curvescope/io.hpp"
#include "curvescope/threads.hpp"
#include "curvescope/util.hpp"

namespace curvescope::features {

const std::vector<std::string>& upos_inventory() {
  static const std::vector<std::string> tags = {
      "ADJ",  "ADP",  "ADV",   "AUX",  "CCONJ", "DET",  "INTJ", "NOUN", "NUM",
      "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM",  "VERB", "X"};
  return tags;
}

bool is_valid_upos(const std::string& tag) {
  const auto& inv = upos_inventory();
  return std::find(inv.begin(), inv.end(), tag) != inv.end();
}

const std::vector<std::string>& word_position_inventory() {
  static const std::vector<std::string> wp = {"B", "I", "L", "U"};
  return wp;
}

ResolvedExample resolve_example(const SequenceStore& store, const ExampleId& id) {
  if (id.sequence_index >= store.size())
    throw DataError("example " + id.to_string() + ": sequence out of range");
  if (id.token_position < 1 || id.token_position >= store.sequence_length())
    throw DataError("example " + id.to_string() + ": position out of range");
  const auto seq = store.sequence(id.sequence_index);
  return {seq.subspan(0, id.token_position), seq[id.token_position]};
}

std::vector<double> fivegram_residual(std::span<const double> fivegram_logprob,
                                      std::span<const double> target_log_freq) {
  const std::size_t n = fivegram_logprob.size();
  if (n != target_log_freq.size())
    throw ConfigError("fivegram_residual: length mismatch");
  if (n < 2) throw ConfigError("fivegram_residual: needs >= 2 examples");
  const double mx = mean(target_log_freq);
  const double my = mean(fivegram_logprob);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = target_log_freq[i] - mx;
    sxx += dx * dx;
    sxy += dx * (fivegram_logprob[i] - my);
  }
  if (sxx <= 0.0)
    throw NumericError("fivegram_residual: zero variance in log-frequency");
  const double slope = sxy / sxx;
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i)
    resid[i] = fivegram_logprob[i] - (my + slope * (target_log_freq[i] - mx));
  return resid;
}

double context_log_length(std::size_t context_tokens) {
  if (context_tokens < 1)
    throw DataError("context_log_length: empty context");
  return std::log(static_cast<double>(context_tokens));
}

double context_log_prob(std::span<const TokenId> context,
                        const CorpusStats& stats) {
  if (context.empty()) throw DataError("context_log_prob: empty context");
  std::vector<double> lf(context.size());
  for (std::size_t i = 0; i < context.size(); ++i)
    lf[i] = stats.token_log_frequency(context[i]);
  return mean(lf);
}

double context_log_prob_windowed(std::span<const TokenId> context,
                                 const CorpusStats& stats, std::size_t w) {
  if (w < 1) throw ConfigError("context_log_prob_windowed: window must be >= 1");
  if (w >= context.size()) return context_log_prob(context, stats);
  return context_log_prob(context.subspan(context.size() - w), stats);
}

std::vector<std::uint32_t> contextual_diversity_raw(const SequenceStore& store,
                                                    const CorpusStats& stats,
                                                    std::uint32_t window,
                                                    std::size_t top_k) {
  const std::uint32_t V = stats.vocab_size;
  std::vector<bool> frequent(V, false);
  for (TokenId t : stats.top_k_tokens(top_k)) frequent[t] = true;

  // Shard sequences; per-type sets merge by union, so counts are identical
  // for any shard layout.
  const std::int64_t n_shards = std::min<std::int64_t>(
      thread_cap(), std::max<std::int64_t>(std::int64_t{1},
                                           static_cast<std::int64_t>(store.size())));
  std::vector<std::vector<std::unordered_set<TokenId>>> partial(
      static_cast<std::size_t>(n_shards),
      std::vector<std::unordered_set<TokenId>>(V));
  const std::uint64_t n_seq = store.size();
  parallel_for(n_shards, [&](std::int64_t s) {
    auto& sets = partial[static_cast<std::size_t>(s)];
    const std::uint64_t lo = n_seq * static_cast<std::uint64_t>(s) /
                             static_cast<std::uint64_t>(n_shards);
    const std::uint64_t hi = n_seq * static_cast<std::uint64_t>(s + 1) /
                             static_cast<std::uint64_t>(n_shards);
    for (std::uint64_t q = lo; q < hi; ++q) {
      const auto seq = store.sequence(q);
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const std::size_t start = i > window ? i - window : 0;
        for (std::size_t j = start; j < i; ++j)
          if (frequent[seq[j]]) sets[seq[i]].insert(seq[j]);
      }
    }
  });
  std::vector<std::uint32_t> raw(V, 0);
  std::vector<std::unordered_set<TokenId>> merged(V);
  for (auto& shard : partial)
    for (std::uint32_t t = 0; t < V; ++t)
      merged[t].insert(shard[t].begin(), shard[t].end());
  for (std::uint32_t t = 0; t < V; ++t)
    raw[t] = static_cast<std::uint32_t>(merged[t].size());
  return raw;
}

DiversityTable contextual_diversity(const SequenceStore& store,
                                    const CorpusStats& stats,
                                    std::uint32_t window, std::size_t top_k,
                                    const gamfit::GamConfig& gam) {
  const std::uint32_t V = stats.vocab_size;
  DiversityTable table;
  table.raw = contextual_diversity_raw(store, stats, window, top_k);
  table.residual.assign(V, std::numeric_limits<double>::quiet_NaN());
  table.occurred.resize(V);
  for (std::uint32_t t = 0; t < V; ++t)
    table.occurred[t] = stats.counts[t] > 0;

  // Frequency trend fitted over occurring types only; residuals are the
  // frequency-adjusted diversity.
  std::vector<double> xs, ys;
  std::vector<std::uint32_t> types;
  for (std::uint32_t t = 0; t < V; ++t) {
    if (!table.occurred[t]) continue;
    xs.push_back(stats.token_log_frequency(t));
    ys.push_back(static_cast<double>(table.raw[t]));
    types.push_back(t);
  }
  table.frequency_trend = gamfit::fit_gam(xs, ys, gam);
  for (std::size_t i = 0; i < types.size(); ++i)
    table.residual[types[i]] = ys[i] - table.frequency_trend.evaluate(xs[i]);
  return table;
}

std::unordered_map<ExampleId, PosAnnotation, curves::ExampleIdHash> ingest_pos(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::unordered_map<ExampleId, PosAnnotation, curves::ExampleIdHash> out;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = io::split_tsv(line);
    if (f.size() != 4)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected 4 columns (seq, pos, UPOS, word-pos)");
    ExampleId id;
    try {
      id.sequence_index = static_cast<std::uint32_t>(std::stoul(f[0]));
      id.token_position = static_cast<std::uint32_t>(std::stoul(f[1]));
    } catch (...) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad example id");
    }
    if (!is_valid_upos(f[2]))
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": unknown UPOS tag '" + f[2] + "'");
    const auto& wp = word_position_inventory();
    if (std::find(wp.begin(), wp.end(), f[3]) == wp.end())
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": word position must be one of B/I/L/U, got '" + f[3] +
                      "'");
    out[id] = PosAnnotation{f[2], f[3]};
  }
  return out;
}

std::vector<PosAnnotation> join_pos(
    const std::unordered_map<ExampleId, PosAnnotation, curves::ExampleIdHash>& ann,
    std::span<const ExampleId> ids) {
  std::vector<PosAnnotation> out;
  out.reserve(ids.size());
  std::string missing;
  std::size_t n_missing = 0;
  for (const auto& id : ids) {
    const auto it = ann.find(id);
    if (it == ann.end()) {
      ++n_missing;
      if (n_missing <= 10) missing += " " + id.to_string();
      continue;
    }
    out.push_back(it->second);
  }
  if (n_missing > 0)
    throw DataError("POS annotations missing for " + std::to_string(n_missing) +
                    " examples:" + missing + (n_missing > 10 ? " ..." : ""));
  return out;
}

std::vector<std::size_t> clip_features(std::vector<std::vector<double>>& columns,
                                       double n_sigmas) {
  std::vector<std::size_t> zero_variance;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    auto& col = columns[c];
    if (col.size() < 2) throw ConfigError("clip_features: needs >= 2 rows");
    const double m = mean(col);
    const double sd = sample_stddev(col);
    if (sd == 0.0) {
      zero_variance.push_back(c);
      continue;
    }
    const double lo = m - n_sigmas * sd;
    const double hi = m + n_sigmas * sd;
    for (double& v : col) v = std::clamp(v, lo, hi);
  }
  return zero_variance;
}

FeatureTable compute_features(
    const Corpus& corpus, const ngram::NgramTable& table,
    std::span<const ExampleId> ids, const DiversityTable& diversity,
    const std::unordered_map<ExampleId, PosAnnotation, curves::ExampleIdHash>* pos) {
  FeatureTable t;
  t.ids.assign(ids.begin(), ids.end());
  const std::size_t n = ids.size();
  t.log_freq.resize(n);
  t.ctx_loglen.resize(n);
  t.ctx_logprob.resize(n);
  t.div_resid.resize(n);
  std::vector<double> fg_logprob(n);
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t i) {
    const auto u = static_cast<std::size_t>(i);
    const ResolvedExample ex = resolve_example(corpus.store, ids[u]);
    t.log_freq[u] = corpus.stats.token_log_frequency(ex.target);
    fg_logprob[u] = table.log_prob(ex.context, ex.target, table.max_order());
    t.ctx_loglen[u] = context_log_length(ex.context.size());
    t.ctx_logprob[u] = context_log_prob(ex.context, corpus.stats);
    t.div_resid[u] = diversity.residual[ex.target];
  });
  t.fg_resid = fivegram_residual(fg_logprob, t.log_freq);
  if (pos) {
    const auto joined = join_pos(*pos, ids);
    t.pos.reserve(n);
    t.word_pos.reserve(n);
    for (const auto& a : joined) {
      t.pos.push_back(a.pos);
      t.word_pos.push_back(a.word_pos);
    }
  }
  return t;
}

void write_features_tsv(const std::string& path, const FeatureTable& t,
                        const std::string& version_line) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "# " << version_line << "\n";
  out << "example_id\tlog_freq\tfg_resid\tctx_loglen\tctx_logprob\tdiv_resid"
         "\tpos\tword_pos\n";
  const bool has_pos = !t.pos.empty();
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << t.ids[i].to_string() << '\t' << fmt(t.log_freq[i]) << '\t'
        << fmt(t.fg_resid[i]) << '\t' << fmt(t.ctx_loglen[i]) << '\t'
        << fmt(t.ctx_logprob[i]) << '\t' << fmt(t.div_resid[i]) << '\t'
        << (has_pos ? t.pos[i] : "-") << '\t'
        << (has_pos ? t.word_pos[i] : "-") << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

FeatureTable read_features_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  FeatureTable t;
  std::string line;
  std::uint64_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    const auto f = io::split_tsv(line);
    if (f.size() != 8)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected 8 columns");
    t.ids.push_back(ExampleId::parse(f[0]));
    t.log_freq.push_back(std::stod(f[1]));
    t.fg_resid.push_back(std::stod(f[2]));
    t.ctx_loglen.push_back(std::stod(f[3]));
    t.ctx_logprob.push_back(std::stod(f[4]));
    t.div_resid.push_back(std::stod(f[5]));
    if (f[6] != "-") {
      t.pos.push_back(f[6]);
      t.word_pos.push_back(f[7]);
    }
  }
  return t;
}

}  // namespace curvescope::features
