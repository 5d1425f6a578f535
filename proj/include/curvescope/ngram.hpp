#ifndef CURVESCOPE_NGRAM_HPP
#define CURVESCOPE_NGRAM_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "curvescope/corpus.hpp"

namespace curvescope::ngram {

using corpus::SequenceStore;
using corpus::TokenId;

// Largest n-gram order the fixed-width tuple key supports.
constexpr std::uint32_t kMaxSupportedOrder = 8;

// Token tuple key with the full tokens stored inline, so hash collisions are
// resolved by key comparison rather than trusted fingerprints.
struct TokenTuple {
  std::array<TokenId, kMaxSupportedOrder> tok{};
  std::uint8_t len = 0;

  static TokenTuple of(std::span<const TokenId> tokens);
  TokenTuple context() const;  // drops the final token

  bool operator==(const TokenTuple& o) const {
    if (len != o.len) return false;
    for (std::uint8_t i = 0; i < len; ++i)
      if (tok[i] != o.tok[i]) return false;
    return true;
  }
  bool operator<(const TokenTuple& o) const;
};

struct TokenTupleHash {
  std::size_t operator()(const TokenTuple& t) const;
};

using CountMap = std::unordered_map<TokenTuple, std::uint64_t, TokenTupleHash>;

// Raw n-gram counts for orders 1..max_order with MLE scoring and
// un-discounted backoff: back off to order-1 only when the full n-gram count
// is zero. N-grams never cross sequence boundaries.
class NgramTable {
public:
  NgramTable(std::uint32_t max_order, std::uint64_t total_tokens);

  std::uint32_t max_order() const { return max_order_; }
  std::uint64_t total_tokens() const { return total_tokens_; }

  std::uint64_t count(std::span<const TokenId> tuple) const;
  std::uint64_t context_count(std::span<const TokenId> context) const;

  // log2 P(target | context) with backoff. Context is truncated to the last
  // order-1 tokens; shorter contexts lower the effective order. An unseen
  // target at order 1 scores the finite floor log2(1/(total_tokens+1)).
  double log_prob(std::span<const TokenId> context, TokenId target,
                  std::uint32_t order) const;
  double surprisal(std::span<const TokenId> context, TokenId target,
                   std::uint32_t order) const;

  void save(const std::string& path) const;
  static NgramTable load(const std::string& path);

  bool operator==(const NgramTable& o) const;

  // Internal: counts keyed by full tuples, one map per order.
  const std::vector<CountMap>& order_counts() const { return counts_; }

private:
  friend NgramTable build_serial(const SequenceStore&, std::uint32_t);
  friend NgramTable build(const SequenceStore&, std::uint32_t);

  // Context totals are the continuation sums of the counts, rebuilt after
  // counting so the table invariant holds by construction.
  void finalize_contexts();

  std::uint32_t max_order_;
  std::uint64_t total_tokens_;
  std::vector<CountMap> counts_;    // counts_[k-1]: k-token tuples
  std::vector<CountMap> contexts_;  // contexts_[k-1]: (k-1)-token contexts
};

NgramTable build_serial(const SequenceStore& store, std::uint32_t max_order);

// Parallel counting partitioned by order (disjoint tables, merge-free);
// equal to build_serial for any thread count.
NgramTable build(const SequenceStore& store, std::uint32_t max_order);

constexpr const char* kTableMagic = "NGT1";

}  // namespace curvescope::ngram

#endif
