#include "curvescope/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "curvescope/errors.hpp"
#include "curvescope/io.hpp"
#include "curvescope/threads.hpp"

namespace curvescope::corpus {

double CorpusStats::token_log_frequency(TokenId w) const {
  if (total_tokens == 0) throw DataError("log-frequency on an empty corpus");
  if (w >= vocab_size) throw DataError("token id out of vocabulary");
  const std::uint64_t c = counts[w];
  if (c == 0)
    return std::log2(1.0 / (static_cast<double>(total_tokens) + 1.0));
  return std::log2(static_cast<double>(c) / static_cast<double>(total_tokens));
}

std::vector<TokenId> CorpusStats::top_k_tokens(std::size_t k) const {
  if (k < 1) throw ConfigError("top_k_tokens: k must be >= 1");
  k = std::min<std::size_t>(k, vocab_size);
  std::vector<TokenId> ids(vocab_size);
  for (std::uint32_t i = 0; i < vocab_size; ++i) ids[i] = i;
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k),
                    ids.end(), [&](TokenId a, TokenId b) {
                      if (counts[a] != counts[b]) return counts[a] > counts[b];
                      return a < b;
                    });
  ids.resize(k);
  return ids;
}

SequenceStore::SequenceStore(std::uint32_t sequence_length,
                             std::vector<TokenId> tokens)
    : seq_len_(sequence_length), tokens_(std::move(tokens)) {
  if (seq_len_ == 0) throw ConfigError("sequence_length must be >= 1");
  if (tokens_.size() % seq_len_ != 0)
    throw DataError("token payload does not align to sequence_length");
}

std::vector<std::uint64_t> tally_counts_serial(const SequenceStore& store,
                                               std::uint32_t vocab_size) {
  std::vector<std::uint64_t> counts(vocab_size, 0);
  for (TokenId t : store.all_tokens()) ++counts[t];
  return counts;
}

std::vector<std::uint64_t> tally_counts(const SequenceStore& store,
                                        std::uint32_t vocab_size) {
  // Shard by record range; per-shard tallies merge by integer addition, so
  // the result is independent of the shard layout.
  const std::int64_t n_shards =
      std::min<std::int64_t>(thread_cap(), std::max<std::int64_t>(1, static_cast<std::int64_t>(store.size())));
  if (n_shards <= 1) return tally_counts_serial(store, vocab_size);

  const std::uint64_t n_seq = store.size();
  std::vector<std::vector<std::uint64_t>> partial(
      static_cast<std::size_t>(n_shards));
  parallel_for(n_shards, [&](std::int64_t s) {
    std::vector<std::uint64_t> local(vocab_size, 0);
    const std::uint64_t lo = n_seq * static_cast<std::uint64_t>(s) /
                             static_cast<std::uint64_t>(n_shards);
    const std::uint64_t hi = n_seq * static_cast<std::uint64_t>(s + 1) /
                             static_cast<std::uint64_t>(n_shards);
    for (std::uint64_t i = lo; i < hi; ++i)
      for (TokenId t : store.sequence(i)) ++local[t];
    partial[static_cast<std::size_t>(s)] = std::move(local);
  });

  std::vector<std::uint64_t> counts(vocab_size, 0);
  for (const auto& local : partial)
    for (std::uint32_t w = 0; w < vocab_size; ++w) counts[w] += local[w];
  return counts;
}

Corpus make_corpus(std::uint32_t vocab_size, std::uint32_t sequence_length,
                   std::vector<TokenId> tokens) {
  for (TokenId t : tokens)
    if (t >= vocab_size)
      throw DataError("token id " + std::to_string(t) + " >= vocab_size");
  SequenceStore store(sequence_length, std::move(tokens));
  CorpusStats stats;
  stats.vocab_size = vocab_size;
  stats.total_tokens = store.total_tokens();
  stats.counts = tally_counts(store, vocab_size);
  return {std::move(store), std::move(stats)};
}

namespace {

std::vector<TokenId> read_binary_tokens(const std::string& path,
                                        std::uint32_t sequence_length) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open: " + path);
  const std::streamoff size = in.tellg();
  const std::streamoff payload = size - 5;  // magic already known present
  if (payload % 4 != 0)
    throw DataError(path + ": truncated token record");
  const std::uint64_t n_tokens = static_cast<std::uint64_t>(payload) / 4;
  if (n_tokens % sequence_length != 0)
    throw DataError(path + ": records do not align to sequence_length");
  in.seekg(5);
  std::vector<TokenId> tokens(n_tokens);
  in.read(reinterpret_cast<char*>(tokens.data()),
          static_cast<std::streamsize>(payload));
  if (!in) throw DataError(path + ": short read");
  return tokens;
}

std::vector<TokenId> read_text_tokens(const std::string& path,
                                      std::uint32_t sequence_length) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::vector<TokenId> tokens;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = io::split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != sequence_length)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": record has " + std::to_string(fields.size()) +
                      " tokens, expected " + std::to_string(sequence_length));
    for (const auto& f : fields) {
      try {
        tokens.push_back(static_cast<TokenId>(std::stoul(f)));
      } catch (...) {
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": bad token id '" + f + "'");
      }
    }
  }
  return tokens;
}

}  // namespace

Corpus ingest_corpus(const std::string& path, std::uint32_t vocab_size,
                     std::uint32_t sequence_length) {
  if (vocab_size == 0) throw ConfigError("vocab_size must be >= 1");
  if (sequence_length == 0) throw ConfigError("sequence_length must be >= 1");

  std::vector<TokenId> tokens;
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw DataError("cannot open: " + path);
    char tag[5] = {};
    probe.read(tag, 5);
    const bool is_binary =
        probe.gcount() == 5 && std::string(tag, 5) == kCorpusMagic;
    const bool is_empty = probe.gcount() <= 0;
    probe.close();
    if (is_empty)
      tokens = {};
    else if (is_binary)
      tokens = read_binary_tokens(path, sequence_length);
    else
      tokens = read_text_tokens(path, sequence_length);
  }
  return make_corpus(vocab_size, sequence_length, std::move(tokens));
}

void write_cseq(const std::string& path, const SequenceStore& store) {
  io::BinaryWriter w(path);
  w.magic(kCorpusMagic);
  const auto tokens = store.all_tokens();
  w.bytes(tokens.data(), tokens.size() * sizeof(TokenId));
  w.close();
}

}  // namespace curvescope::corpus
