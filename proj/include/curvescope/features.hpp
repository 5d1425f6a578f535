#ifndef CURVESCOPE_FEATURES_HPP
#define CURVESCOPE_FEATURES_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "curvescope/corpus.hpp"
#include "curvescope/curves.hpp"
#include "curvescope/gamfit.hpp"
#include "curvescope/ngram.hpp"

namespace curvescope::features {

using corpus::Corpus;
using corpus::CorpusStats;
using corpus::SequenceStore;
using corpus::TokenId;
using curves::ExampleId;

// The 17 Universal POS tags.
extern const std::vector<std::string>& upos_inventory();
bool is_valid_upos(const std::string& tag);
extern const std::vector<std::string>& word_position_inventory();  // B I L U

struct PosAnnotation {
  std::string pos;
  std::string word_pos;  // B, I, L, or U
};

// Per-token-type contextual diversity: distinct frequent tokens seen in the
// window preceding any occurrence, with GAM-over-log-frequency residuals.
struct DiversityTable {
  std::vector<std::uint32_t> raw;       // per token type
  std::vector<double> residual;         // NaN for never-occurring types
  std::vector<bool> occurred;
  gamfit::FittedCurve frequency_trend;  // diversity ~ log-frequency
};

// Resolves an example id against the corpus: context tokens and target.
struct ResolvedExample {
  std::span<const TokenId> context;
  TokenId target;
};
ResolvedExample resolve_example(const SequenceStore& store, const ExampleId& id);

// 5-gram log-probability residuals after a simple regression on target
// log-frequency. Requires >= 2 examples and variance in log-frequency.
std::vector<double> fivegram_residual(std::span<const double> fivegram_logprob,
                                      std::span<const double> target_log_freq);

double context_log_length(std::size_t context_tokens);  // natural log
double context_log_prob(std::span<const TokenId> context, const CorpusStats& stats);
// Windowed variant over the last w context tokens; w >= length reduces to
// the full-context value.
double context_log_prob_windowed(std::span<const TokenId> context,
                                 const CorpusStats& stats, std::size_t w);

// Raw per-type counts only; usable on corpora too small for the trend fit.
std::vector<std::uint32_t> contextual_diversity_raw(const SequenceStore& store,
                                                    const CorpusStats& stats,
                                                    std::uint32_t window = 30,
                                                    std::size_t top_k = 10000);

DiversityTable contextual_diversity(const SequenceStore& store,
                                    const CorpusStats& stats,
                                    std::uint32_t window = 30,
                                    std::size_t top_k = 10000,
                                    const gamfit::GamConfig& gam = {});

// POS annotation file: TSV rows (sequence_index, token_position, UPOS,
// word position in {B,I,L,U}).
std::unordered_map<ExampleId, PosAnnotation, curves::ExampleIdHash> ingest_pos(
    const std::string& path);

// Joins annotations onto an example list; missing annotations raise a
// DataError listing the examples.
std::vector<PosAnnotation> join_pos(
    const std::unordered_map<ExampleId, PosAnnotation, curves::ExampleIdHash>& ann,
    std::span<const ExampleId> ids);

// Clips each column to mean +- 5 sample standard deviations (statistics from
// the unclipped column). Zero-variance columns pass through; their indices
// are reported.
std::vector<std::size_t> clip_features(std::vector<std::vector<double>>& columns,
                                       double n_sigmas = 5.0);

// The full per-example predictor table in the documented column order.
struct FeatureTable {
  std::vector<ExampleId> ids;
  std::vector<double> log_freq;
  std::vector<double> fg_resid;
  std::vector<double> ctx_loglen;
  std::vector<double> ctx_logprob;
  std::vector<double> div_resid;
  std::vector<std::string> pos;       // empty when unannotated
  std::vector<std::string> word_pos;

  std::size_t size() const { return ids.size(); }
};

FeatureTable compute_features(
    const Corpus& corpus, const ngram::NgramTable& table,
    std::span<const ExampleId> ids, const DiversityTable& diversity,
    const std::unordered_map<ExampleId, PosAnnotation, curves::ExampleIdHash>* pos);

void write_features_tsv(const std::string& path, const FeatureTable& t,
                        const std::string& version_line);
FeatureTable read_features_tsv(const std::string& path);

}  // namespace curvescope::features

#endif
