#ifndef CURVESCOPE_CORPUS_HPP
#define CURVESCOPE_CORPUS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace curvescope::corpus {

using TokenId = std::uint32_t;

struct CorpusStats {
  std::uint32_t vocab_size = 0;
  std::uint64_t total_tokens = 0;
  std::vector<std::uint64_t> counts;  // indexed by token id

  // log2 relative frequency; unseen tokens get the finite floor
  // log2(1 / (total_tokens + 1)).
  double token_log_frequency(TokenId w) const;

  // k tokens by descending count, ties broken by ascending id. k above the
  // vocabulary size is clamped (warning via return size).
  std::vector<TokenId> top_k_tokens(std::size_t k) const;
};

// Fixed-length token sequences stored flat.
class SequenceStore {
public:
  SequenceStore(std::uint32_t sequence_length, std::vector<TokenId> tokens);

  std::uint32_t sequence_length() const { return seq_len_; }
  std::uint64_t size() const { return tokens_.size() / seq_len_; }
  std::uint64_t total_tokens() const { return tokens_.size(); }

  std::span<const TokenId> sequence(std::uint64_t i) const {
    return {tokens_.data() + i * seq_len_, seq_len_};
  }
  std::span<const TokenId> all_tokens() const { return tokens_; }

private:
  std::uint32_t seq_len_;
  std::vector<TokenId> tokens_;
};

struct Corpus {
  SequenceStore store;
  CorpusStats stats;
};

// Reads a token file. Files starting with the CSEQ1 magic are little-endian
// u32 records of sequence_length tokens each; anything else is parsed as the
// text fixture format (one space-separated id sequence per line). Token ids
// must be < vocab_size and records must align to sequence_length.
Corpus ingest_corpus(const std::string& path, std::uint32_t vocab_size,
                     std::uint32_t sequence_length);

// In-memory construction used by tests and the synthetic generator.
Corpus make_corpus(std::uint32_t vocab_size, std::uint32_t sequence_length,
                   std::vector<TokenId> tokens);

// Serial tally kept as the reference path for the sharded builder.
std::vector<std::uint64_t> tally_counts_serial(const SequenceStore& store,
                                               std::uint32_t vocab_size);
std::vector<std::uint64_t> tally_counts(const SequenceStore& store,
                                        std::uint32_t vocab_size);

void write_cseq(const std::string& path, const SequenceStore& store);

constexpr const char* kCorpusMagic = "CSEQ1";

}  // namespace curvescope::corpus

#endif
