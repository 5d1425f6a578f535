#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "curvescope/corpus.hpp"
#include "curvescope/errors.hpp"
#include "curvescope/rng.hpp"
#include "curvescope/threads.hpp"
#include "oracles.hpp"

using namespace curvescope;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/curvescope_test_") + name;
}

corpus::Corpus random_corpus(std::uint32_t vocab, std::uint32_t seq_len,
                             std::uint64_t n_seq, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  std::vector<corpus::TokenId> tokens(n_seq * seq_len);
  for (auto& t : tokens)
    t = static_cast<corpus::TokenId>(rng.next_below(vocab));
  return corpus::make_corpus(vocab, seq_len, std::move(tokens));
}

}  // namespace

TEST_CASE("empty file ingests as an empty corpus") {
  const std::string path = temp_path("empty.cseq");
  std::ofstream(path).close();
  const auto corp = corpus::ingest_corpus(path, 10, 4);
  CHECK(corp.stats.total_tokens == 0);
  for (auto c : corp.stats.counts) CHECK(c == 0);
  CHECK_THROWS_AS(corp.stats.token_log_frequency(0), DataError);
  std::remove(path.c_str());
}

TEST_CASE("binary and text formats agree") {
  const auto corp = random_corpus(50, 8, 20, 7);
  const std::string bin = temp_path("corpus.cseq");
  corpus::write_cseq(bin, corp.store);
  const auto reread = corpus::ingest_corpus(bin, 50, 8);
  CHECK(reread.stats.counts == corp.stats.counts);
  CHECK(reread.stats.total_tokens == 160);

  const std::string txt = temp_path("corpus.tsv");
  {
    std::ofstream f(txt);
    for (std::uint64_t s = 0; s < corp.store.size(); ++s) {
      const auto seq = corp.store.sequence(s);
      for (std::size_t i = 0; i < seq.size(); ++i)
        f << seq[i] << (i + 1 < seq.size() ? ' ' : '\n');
    }
  }
  const auto from_text = corpus::ingest_corpus(txt, 50, 8);
  CHECK(from_text.stats.counts == corp.stats.counts);
  std::remove(bin.c_str());
  std::remove(txt.c_str());
}

TEST_CASE("format errors: truncated records and out-of-vocabulary ids") {
  const std::string path = temp_path("bad.cseq");
  {
    std::ofstream f(path, std::ios::binary);
    f << "CSEQ1";
    const std::uint32_t tokens[3] = {1, 2, 3};  // 3 tokens, seq_len 4
    f.write(reinterpret_cast<const char*>(tokens), sizeof tokens);
  }
  CHECK_THROWS_AS(corpus::ingest_corpus(path, 10, 4), DataError);
  std::remove(path.c_str());

  const std::string txt = temp_path("oov.tsv");
  std::ofstream(txt) << "1 2 3 99\n";
  CHECK_THROWS_AS(corpus::ingest_corpus(txt, 10, 4), DataError);
  std::remove(txt.c_str());
}

TEST_CASE("token counting: two sequences of length four") {
  const auto corp = corpus::make_corpus(5, 4, {0, 1, 1, 2, 3, 3, 3, 4});
  CHECK(corp.stats.total_tokens == 8);
  CHECK(corp.stats.counts[1] == 2);
  CHECK(corp.stats.counts[3] == 3);
}

TEST_CASE("counts match the single-pass tally oracle; shard layout irrelevant") {
  const auto corp = random_corpus(100, 16, 64, 11);
  const auto expected = oracles::tally(corp.store.all_tokens(), 100);
  CHECK(corp.stats.counts == expected);
  CHECK(corpus::tally_counts_serial(corp.store, 100) == expected);
  const int saved = thread_cap();
  for (int t : {1, 2, 3, 7}) {
    set_thread_cap(t);
    CHECK(corpus::tally_counts(corp.store, 100) == expected);
  }
  set_thread_cap(saved);
}

TEST_CASE("token_log_frequency") {
  const auto single = corpus::make_corpus(2, 4, {0, 0, 0, 0});
  CHECK(single.stats.token_log_frequency(0) == 0.0);
  // Unseen token floors at log2(1/(total+1)).
  CHECK(single.stats.token_log_frequency(1) ==
        doctest::Approx(std::log2(1.0 / 5.0)).epsilon(1e-15));

  const auto pair = corpus::make_corpus(2, 2, {0, 1});
  CHECK(pair.stats.token_log_frequency(0) == doctest::Approx(-1.0));

  const auto corp = random_corpus(30, 8, 32, 3);
  for (std::uint32_t w = 0; w < 30; ++w) {
    if (corp.stats.counts[w] == 0) continue;
    const double expect = std::log2(static_cast<double>(corp.stats.counts[w]) /
                                    static_cast<double>(corp.stats.total_tokens));
    CHECK(corp.stats.token_log_frequency(w) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("relative frequencies sum to one") {
  const auto corp = random_corpus(64, 8, 100, 9);
  double sum = 0.0;
  for (std::uint32_t w = 0; w < 64; ++w)
    sum += std::exp2(corp.stats.token_log_frequency(w)) *
           (corp.stats.counts[w] > 0 ? 1.0 : 0.0);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("top_k_tokens ordering and tie-break") {
  const auto corp = corpus::make_corpus(3, 3, {0, 0, 1});
  CHECK(corpus::CorpusStats(corp.stats).top_k_tokens(1) ==
        std::vector<corpus::TokenId>{0});

  const auto tie = corpus::make_corpus(2, 2, {0, 1});
  CHECK(tie.stats.top_k_tokens(2) == std::vector<corpus::TokenId>{0, 1});

  // k beyond the vocabulary clamps.
  CHECK(tie.stats.top_k_tokens(10).size() == 2);

  const auto corp2 = random_corpus(40, 8, 64, 13);
  const auto top = corp2.stats.top_k_tokens(10);
  std::vector<std::pair<std::uint64_t, std::uint32_t>> order;
  for (std::uint32_t w = 0; w < 40; ++w)
    order.emplace_back(corp2.stats.counts[w], w);
  std::sort(order.begin(), order.end(), [](auto a, auto b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; i < top.size(); ++i)
    CHECK(top[i] == order[i].second);
}
