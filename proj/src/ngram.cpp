#include "curvescope/ngram.hpp"

#include <algorithm>
#include <cmath>

#include "curvescope/errors.hpp"
#include "curvescope/io.hpp"
#include "curvescope/rng.hpp"
#include "curvescope/threads.hpp"

namespace curvescope::ngram {

TokenTuple TokenTuple::of(std::span<const TokenId> tokens) {
  if (tokens.size() > kMaxSupportedOrder)
    throw ConfigError("n-gram order above supported maximum " +
                      std::to_string(kMaxSupportedOrder));
  TokenTuple t;
  t.len = static_cast<std::uint8_t>(tokens.size());
  std::copy(tokens.begin(), tokens.end(), t.tok.begin());
  return t;
}

TokenTuple TokenTuple::context() const {
  TokenTuple t = *this;
  if (t.len == 0) throw ConfigError("context of an empty tuple");
  t.tok[--t.len] = 0;
  return t;
}

bool TokenTuple::operator<(const TokenTuple& o) const {
  const std::uint8_t n = std::min(len, o.len);
  for (std::uint8_t i = 0; i < n; ++i)
    if (tok[i] != o.tok[i]) return tok[i] < o.tok[i];
  return len < o.len;
}

std::size_t TokenTupleHash::operator()(const TokenTuple& t) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ t.len;
  for (std::uint8_t i = 0; i < t.len; ++i)
    h = CounterRng::mix(h ^ t.tok[i]);
  return static_cast<std::size_t>(h);
}

NgramTable::NgramTable(std::uint32_t max_order, std::uint64_t total_tokens)
    : max_order_(max_order),
      total_tokens_(total_tokens),
      counts_(max_order),
      contexts_(max_order) {
  if (max_order < 1) throw ConfigError("max_order must be >= 1");
  if (max_order > kMaxSupportedOrder)
    throw ConfigError("max_order above supported maximum " +
                      std::to_string(kMaxSupportedOrder));
}

void NgramTable::finalize_contexts() {
  for (std::uint32_t k = 1; k <= max_order_; ++k) {
    auto& ctx = contexts_[k - 1];
    ctx.clear();
    for (const auto& [tuple, c] : counts_[k - 1]) ctx[tuple.context()] += c;
  }
}

std::uint64_t NgramTable::count(std::span<const TokenId> tuple) const {
  if (tuple.empty() || tuple.size() > max_order_) return 0;
  const auto& map = counts_[tuple.size() - 1];
  const auto it = map.find(TokenTuple::of(tuple));
  return it == map.end() ? 0 : it->second;
}

std::uint64_t NgramTable::context_count(std::span<const TokenId> context) const {
  if (context.size() >= max_order_) return 0;
  const auto& map = contexts_[context.size()];
  const auto it = map.find(TokenTuple::of(context));
  return it == map.end() ? 0 : it->second;
}

double NgramTable::log_prob(std::span<const TokenId> context, TokenId target,
                            std::uint32_t order) const {
  if (order < 1 || order > max_order_)
    throw ConfigError("order " + std::to_string(order) +
                      " outside [1, max_order]");
  // Truncate to the last order-1 tokens; a shorter context lowers the
  // effective starting order.
  std::uint32_t k = order;
  if (context.size() < order - 1)
    k = static_cast<std::uint32_t>(context.size()) + 1;
  for (; k > 1; --k) {
    const auto ctx = context.subspan(context.size() - (k - 1));
    std::array<TokenId, kMaxSupportedOrder> buf;
    std::copy(ctx.begin(), ctx.end(), buf.begin());
    buf[k - 1] = target;
    const std::uint64_t c = count({buf.data(), k});
    if (c > 0) {
      const std::uint64_t cc = context_count(ctx);
      return std::log2(static_cast<double>(c) / static_cast<double>(cc));
    }
  }
  const std::uint64_t c1 = count({&target, 1});
  if (c1 > 0)
    return std::log2(static_cast<double>(c1) /
                     static_cast<double>(total_tokens_));
  return std::log2(1.0 / (static_cast<double>(total_tokens_) + 1.0));
}

double NgramTable::surprisal(std::span<const TokenId> context, TokenId target,
                             std::uint32_t order) const {
  return -log_prob(context, target, order);
}

bool NgramTable::operator==(const NgramTable& o) const {
  return max_order_ == o.max_order_ && total_tokens_ == o.total_tokens_ &&
         counts_ == o.counts_ && contexts_ == o.contexts_;
}

namespace {

void count_range(const SequenceStore& store, std::uint32_t max_order,
                 std::uint64_t seq_lo, std::uint64_t seq_hi,
                 std::vector<CountMap>& counts) {
  for (std::uint64_t s = seq_lo; s < seq_hi; ++s) {
    const auto seq = store.sequence(s);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const std::uint32_t longest =
          std::min<std::uint32_t>(max_order, static_cast<std::uint32_t>(i + 1));
      for (std::uint32_t k = 1; k <= longest; ++k)
        ++counts[k - 1][TokenTuple::of(seq.subspan(i + 1 - k, k))];
    }
  }
}

void count_one_order(const SequenceStore& store, std::uint32_t k,
                     CountMap& counts) {
  for (std::uint64_t s = 0; s < store.size(); ++s) {
    const auto seq = store.sequence(s);
    for (std::size_t i = k - 1; i < seq.size(); ++i)
      ++counts[TokenTuple::of(seq.subspan(i + 1 - k, k))];
  }
}

}  // namespace

NgramTable build_serial(const SequenceStore& store, std::uint32_t max_order) {
  if (store.size() == 0) throw DataError("n-gram build on an empty corpus");
  if (max_order > store.sequence_length())
    throw ConfigError("max_order exceeds sequence_length");
  NgramTable table(max_order, store.total_tokens());
  count_range(store, max_order, 0, store.size(), table.counts_);
  table.finalize_contexts();
  return table;
}

NgramTable build(const SequenceStore& store, std::uint32_t max_order) {
  if (store.size() == 0) throw DataError("n-gram build on an empty corpus");
  if (max_order > store.sequence_length())
    throw ConfigError("max_order exceeds sequence_length");
  if (thread_cap() <= 1 || max_order == 1) return build_serial(store, max_order);

  // Orders are disjoint tables, so counting each order independently is a
  // merge-free partition of the work; per-order results cannot depend on
  // the thread layout.
  NgramTable table(max_order, store.total_tokens());
  parallel_for(max_order, [&](std::int64_t k) {
    count_one_order(store, static_cast<std::uint32_t>(k + 1),
                    table.counts_[static_cast<std::size_t>(k)]);
  });
  table.finalize_contexts();
  return table;
}

void NgramTable::save(const std::string& path) const {
  io::BinaryWriter w(path);
  w.magic(kTableMagic);
  w.u32(1);  // version
  w.u32(max_order_);
  w.u64(total_tokens_);
  for (std::uint32_t k = 1; k <= max_order_; ++k) {
    const auto& map = counts_[k - 1];
    // Sorted entries keep the file byte-identical across shard layouts.
    std::vector<const std::pair<const TokenTuple, std::uint64_t>*> entries;
    entries.reserve(map.size());
    for (const auto& e : map) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(),
              [](auto* a, auto* b) { return a->first < b->first; });
    w.u64(entries.size());
    for (const auto* e : entries) {
      for (std::uint8_t i = 0; i < e->first.len; ++i) w.u32(e->first.tok[i]);
      w.u64(e->second);
    }
  }
  w.close();
}

NgramTable NgramTable::load(const std::string& path) {
  io::BinaryReader r(path);
  r.expect_magic(kTableMagic);
  const std::uint32_t version = r.u32();
  if (version != 1)
    throw DataError(path + ": unsupported table version " +
                    std::to_string(version));
  const std::uint32_t max_order = r.u32();
  const std::uint64_t total = r.u64();
  NgramTable table(max_order, total);
  for (std::uint32_t k = 1; k <= max_order; ++k) {
    const std::uint64_t n = r.u64();
    auto& map = table.counts_[k - 1];
    map.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      TokenTuple t;
      t.len = static_cast<std::uint8_t>(k);
      for (std::uint32_t j = 0; j < k; ++j) t.tok[j] = r.u32();
      map[t] = r.u64();
    }
  }
  table.finalize_contexts();
  return table;
}

}  // namespace curvescope::ngram
