#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "curvescope/errors.hpp"
#include "curvescope/features.hpp"
#include "curvescope/rng.hpp"
#include "curvescope/threads.hpp"
#include "curvescope/util.hpp"
#include "oracles.hpp"

using namespace curvescope;

namespace {

corpus::Corpus random_corpus(std::uint32_t vocab, std::uint32_t seq_len,
                             std::uint64_t n_seq, std::uint64_t seed) {
  CounterRng rng(seed, 10);
  std::vector<corpus::TokenId> tokens(n_seq * seq_len);
  for (auto& t : tokens)
    t = static_cast<corpus::TokenId>(rng.next_below(vocab));
  return corpus::make_corpus(vocab, seq_len, std::move(tokens));
}

gamfit::GamConfig tiny_gam() {
  gamfit::GamConfig cfg;
  cfg.n_splines = 4;
  return cfg;
}

}  // namespace

TEST_CASE("fivegram residuals: perfect fit, closed form, orthogonality") {
  // Log-prob exactly equal to log-frequency: residuals vanish.
  const std::vector<double> lf = {-1, -2, -3, -4};
  CHECK(features::fivegram_residual(lf, lf) ==
        std::vector<double>{0, 0, 0, 0});

  // Two points: the simple regression is exact, residuals are zero.
  const std::vector<double> y2 = {3.0, 7.0};
  const std::vector<double> x2 = {-1.0, -2.0};
  const auto r2 = features::fivegram_residual(y2, x2);
  CHECK(r2[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r2[1] == doctest::Approx(0.0).epsilon(1e-12));

  // Closed-form slope/intercept oracle on a longer fixture.
  CounterRng rng(3, 11);
  std::vector<double> x(40), y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    x[i] = -rng.next_double() * 8.0;
    y[i] = 1.5 * x[i] + rng.next_gaussian();
  }
  const auto resid = features::fivegram_residual(y, x);
  const double mx = mean(x), my = mean(y);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx, icept = my - slope * mx;
  double dot = 0.0;
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(resid[i] ==
          doctest::Approx(y[i] - (icept + slope * x[i])).epsilon(1e-10));
    dot += resid[i] * x[i];
  }
  CHECK(std::abs(dot) < 1e-8 * 40);

  CHECK_THROWS_AS(
      features::fivegram_residual(y2, std::vector<double>{-1.0, -1.0}),
      NumericError);
}

TEST_CASE("context log length and log prob") {
  CHECK(features::context_log_length(1) == 0.0);
  CHECK(features::context_log_length(7) ==
        doctest::Approx(std::log(7.0)).epsilon(1e-12));
  CHECK_THROWS_AS(features::context_log_length(0), DataError);

  const auto corp = corpus::make_corpus(4, 4, {0, 0, 1, 2});
  const std::vector<corpus::TokenId> whole = {0};
  // Token 0 has probability 1/2.
  CHECK(features::context_log_prob(whole, corp.stats) == doctest::Approx(-1.0));
  const std::vector<corpus::TokenId> two = {0, 1};  // -1 and -2 in log2
  CHECK(features::context_log_prob(two, corp.stats) == doctest::Approx(-1.5));

  const auto big = random_corpus(20, 8, 20, 13);
  const auto seq = big.store.sequence(0);
  std::vector<double> lf;
  for (auto t : seq) lf.push_back(big.stats.token_log_frequency(t));
  CHECK(features::context_log_prob(seq, big.stats) ==
        doctest::Approx(mean(lf)).epsilon(1e-12));
}

TEST_CASE("windowed context log prob reduces to the full value") {
  const auto corp = random_corpus(15, 10, 12, 17);
  const auto seq = corp.store.sequence(2);
  const auto full = features::context_log_prob(seq, corp.stats);
  for (std::size_t w : {10, 16, 128})
    CHECK(features::context_log_prob_windowed(seq, corp.stats, w) == full);
  // Window 1 is the last token's log-frequency.
  CHECK(features::context_log_prob_windowed(seq, corp.stats, 1) ==
        corp.stats.token_log_frequency(seq[seq.size() - 1]));
}

TEST_CASE("contextual diversity: hand cases") {
  // Token 2 always directly after token 1 and nothing else in its window.
  const auto corp = corpus::make_corpus(3, 4, {1, 2, 0, 0, 1, 2, 0, 1});
  CHECK(features::contextual_diversity_raw(corp.store, corp.stats, 30, 3)[2] ==
        1);
  // Token at position 0 of every sequence, never preceded: diversity 0.
  const auto corp2 = corpus::make_corpus(3, 3, {2, 0, 1, 2, 1, 0});
  CHECK(features::contextual_diversity_raw(corp2.store, corp2.stats, 30, 3)[2] ==
        0);
  // The full op needs enough distinct frequencies for the trend fit.
  CHECK_THROWS_AS(
      features::contextual_diversity(corp.store, corp.stats, 30, 3, tiny_gam()),
      ConfigError);
}

TEST_CASE("contextual diversity matches the window-scan oracle; sharding free") {
  const auto corp = random_corpus(30, 24, 40, 19);
  const std::size_t top_k = 12;
  std::vector<bool> frequent(30, false);
  for (auto t : corp.stats.top_k_tokens(top_k)) frequent[t] = true;

  const auto div = features::contextual_diversity(corp.store, corp.stats, 5,
                                                  top_k, tiny_gam());
  for (std::uint32_t t = 0; t < 30; ++t)
    CHECK(div.raw[t] == oracles::diversity_window_scan(
                            corp.store.all_tokens(), 24, t, 5, frequent));

  const int saved = thread_cap();
  for (int threads : {1, 3}) {
    set_thread_cap(threads);
    const auto again = features::contextual_diversity(corp.store, corp.stats,
                                                      5, top_k, tiny_gam());
    CHECK(again.raw == div.raw);
    CHECK(again.residual == div.residual);
  }
  set_thread_cap(saved);

  // Residuals exist for occurring types and are centered near zero on the
  // fitted trend.
  for (std::uint32_t t = 0; t < 30; ++t)
    if (div.occurred[t]) CHECK(std::isfinite(div.residual[t]));
}

TEST_CASE("diversity raw counts are monotone under corpus growth") {
  const auto small = random_corpus(20, 16, 20, 23);
  auto tokens = std::vector<corpus::TokenId>(small.store.all_tokens().begin(),
                                             small.store.all_tokens().end());
  CounterRng rng(29, 12);
  for (int i = 0; i < 10 * 16; ++i)
    tokens.push_back(static_cast<corpus::TokenId>(rng.next_below(20)));
  const auto grown = corpus::make_corpus(20, 16, tokens);

  // Same top-k membership keeps the comparison apples to apples.
  const auto div_small =
      features::contextual_diversity_raw(small.store, small.stats, 6, 20);
  const auto div_big =
      features::contextual_diversity_raw(grown.store, grown.stats, 6, 20);
  for (std::uint32_t t = 0; t < 20; ++t)
    CHECK(div_big[t] >= div_small[t]);
}

TEST_CASE("POS ingestion: valid rows, bad tags, join") {
  const std::string path = "/tmp/curvescope_test_pos.tsv";
  {
    std::ofstream f(path);
    f << "0\t1\tNOUN\tU\n0\t2\tVERB\tB\n1\t1\tX\tL\n";
  }
  const auto ann = features::ingest_pos(path);
  CHECK(ann.size() == 3);
  CHECK(ann.at({0, 1}).pos == "NOUN");
  CHECK(ann.at({0, 2}).word_pos == "B");

  std::vector<curves::ExampleId> ids = {{0, 1}, {1, 1}};
  const auto joined = features::join_pos(ann, ids);
  CHECK(joined[1].pos == "X");
  std::vector<curves::ExampleId> missing = {{0, 1}, {9, 9}};
  CHECK_THROWS_AS(features::join_pos(ann, missing), DataError);

  {
    std::ofstream f(path);
    f << "0\t1\tNOUNN\tU\n";
  }
  CHECK_THROWS_AS(features::ingest_pos(path), DataError);
  {
    std::ofstream f(path);
    f << "0\t1\tNOUN\tQ\n";
  }
  CHECK_THROWS_AS(features::ingest_pos(path), DataError);
  std::remove(path.c_str());
}

TEST_CASE("clip_features") {
  // All values within 5 sigma: identity.
  std::vector<std::vector<double>> cols = {{1, 2, 3, 4, 5}};
  const auto before = cols;
  features::clip_features(cols);
  CHECK(cols == before);

  // A single extreme outlier is pulled to mean + 5 sigma (pre-clip stats).
  std::vector<double> with_outlier(101, 0.0);
  CounterRng rng(31, 13);
  for (std::size_t i = 0; i < 100; ++i) with_outlier[i] = rng.next_gaussian();
  const double m0 = mean(std::span(with_outlier).subspan(0, 100));
  const double sd0 = sample_stddev(std::span(with_outlier).subspan(0, 100));
  with_outlier[100] = m0 + 10.0 * sd0;
  std::vector<std::vector<double>> c2 = {with_outlier};
  const double m = mean(with_outlier);
  const double sd = sample_stddev(with_outlier);
  features::clip_features(c2);
  CHECK(c2[0][100] == doctest::Approx(m + 5.0 * sd).epsilon(1e-12));

  // Zero-variance column passes through and is reported.
  std::vector<std::vector<double>> flat = {{2, 2, 2}};
  const auto warned = features::clip_features(flat);
  CHECK(warned == std::vector<std::size_t>{0});
  CHECK(flat[0] == std::vector<double>{2, 2, 2});
}

TEST_CASE("feature table assembly and TSV round-trip") {
  const auto corp = random_corpus(40, 16, 60, 37);
  const auto table = ngram::build(corp.store, 5);
  const auto div = features::contextual_diversity(corp.store, corp.stats, 30,
                                                  40, tiny_gam());
  std::vector<curves::ExampleId> ids;
  CounterRng rng(41, 14);
  for (std::uint32_t e = 0; e < 30; ++e)
    ids.push_back({static_cast<std::uint32_t>(rng.next_below(60)),
                   static_cast<std::uint32_t>(1 + rng.next_below(15))});

  const auto ft = features::compute_features(corp, table, ids, div, nullptr);
  CHECK(ft.size() == 30);
  for (std::size_t i = 0; i < ft.size(); ++i) {
    const auto ex = features::resolve_example(corp.store, ids[i]);
    CHECK(ft.log_freq[i] == corp.stats.token_log_frequency(ex.target));
    CHECK(ft.ctx_loglen[i] ==
          doctest::Approx(std::log(static_cast<double>(ids[i].token_position))));
    CHECK(ft.div_resid[i] == div.residual[ex.target]);
  }
  // Residualized 5-gram column is orthogonal to log-frequency.
  const double mx = mean(ft.log_freq);
  double centered = 0.0;
  for (std::size_t i = 0; i < ft.size(); ++i)
    centered += ft.fg_resid[i] * (ft.log_freq[i] - mx);
  CHECK(std::abs(centered) < 1e-8 * static_cast<double>(ft.size()));

  const std::string path = "/tmp/curvescope_test_features.tsv";
  features::write_features_tsv(path, ft, "curvescope test");
  const auto back = features::read_features_tsv(path);
  CHECK(back.size() == ft.size());
  for (std::size_t i = 0; i < ft.size(); ++i) {
    CHECK(back.ids[i] == ft.ids[i]);
    CHECK(back.log_freq[i] == doctest::Approx(ft.log_freq[i]).epsilon(1e-10));
    CHECK(back.ctx_logprob[i] ==
          doctest::Approx(ft.ctx_logprob[i]).epsilon(1e-10));
  }
  std::remove(path.c_str());
}

TEST_CASE("diversity residuals are orthogonal to log-frequency") {
  // The second-difference penalty leaves linear functions unpenalized, so
  // even the penalized fit keeps residuals orthogonal to the covariate.
  const auto corp = random_corpus(60, 24, 120, 43);
  gamfit::GamConfig cfg;
  cfg.n_splines = 8;
  const auto div =
      features::contextual_diversity(corp.store, corp.stats, 10, 60, cfg);
  std::vector<double> resid, lf;
  for (std::uint32_t t = 0; t < 60; ++t) {
    if (!div.occurred[t]) continue;
    resid.push_back(div.residual[t]);
    lf.push_back(corp.stats.token_log_frequency(t));
  }
  const double ml = mean(lf);
  double dot = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < resid.size(); ++i) {
    dot += resid[i] * (lf[i] - ml);
    sum += resid[i];
  }
  CHECK(std::abs(sum) < 1e-8 * static_cast<double>(resid.size()));
  CHECK(std::abs(dot) < 1e-8 * static_cast<double>(resid.size()));
}
