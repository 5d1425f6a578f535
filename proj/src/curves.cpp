#include "curvescope/curves.hpp"

#include <cmath>

#include "curvescope/errors.hpp"
#include "curvescope/io.hpp"
#include "curvescope/threads.hpp"

namespace curvescope::curves {

void CheckpointGrid::validate() const {
  if (steps.empty()) throw DataError("checkpoint grid is empty");
  if (steps.front() < 0) throw DataError("checkpoint steps must be >= 0");
  for (std::size_t i = 1; i < steps.size(); ++i)
    if (steps[i] <= steps[i - 1])
      throw DataError("checkpoint grid not strictly increasing at index " +
                      std::to_string(i));
}

std::vector<double> CheckpointGrid::log10_nonzero_steps(
    std::size_t* first_nonzero) const {
  std::size_t skip = 0;
  while (skip < steps.size() && steps[skip] == 0) ++skip;
  if (first_nonzero) *first_nonzero = skip;
  std::vector<double> x;
  x.reserve(steps.size() - skip);
  for (std::size_t i = skip; i < steps.size(); ++i)
    x.push_back(std::log10(static_cast<double>(steps[i])));
  return x;
}

std::string ExampleId::to_string() const {
  return std::to_string(sequence_index) + ":" + std::to_string(token_position);
}

ExampleId ExampleId::parse(const std::string& s) {
  const std::size_t colon = s.find(':');
  if (colon == std::string::npos)
    throw DataError("bad example id '" + s + "' (expected seq:pos)");
  try {
    ExampleId id;
    id.sequence_index = static_cast<std::uint32_t>(std::stoul(s.substr(0, colon)));
    id.token_position = static_cast<std::uint32_t>(std::stoul(s.substr(colon + 1)));
    return id;
  } catch (const DataError&) {
    throw;
  } catch (...) {
    throw DataError("bad example id '" + s + "'");
  }
}

SurprisalMatrix::SurprisalMatrix(std::string run_id, CheckpointGrid grid,
                                 std::vector<ExampleId> ids,
                                 std::vector<float> values)
    : run_id_(std::move(run_id)),
      grid_(std::move(grid)),
      ids_(std::move(ids)),
      values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != ids_.size() * grid_.size())
    throw DataError("surprisal matrix shape mismatch: " +
                    std::to_string(values_.size()) + " values for " +
                    std::to_string(ids_.size()) + " x " +
                    std::to_string(grid_.size()));
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const float v = values_[i];
    if (!std::isfinite(v) || v < 0.0f)
      throw DataError("non-finite or negative surprisal at row " +
                      std::to_string(i / grid_.size()) + " col " +
                      std::to_string(i % grid_.size()));
  }
  index_.reserve(ids_.size());
  for (std::uint64_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i].token_position < 1)
      throw DataError("example " + ids_[i].to_string() +
                      ": token_position must be >= 1");
    if (!index_.emplace(ids_[i], i).second)
      throw DataError("duplicate example id " + ids_[i].to_string());
  }
}

std::vector<double> SurprisalMatrix::row_as_double(std::uint64_t i) const {
  const auto r = row(i);
  return std::vector<double>(r.begin(), r.end());
}

std::uint64_t SurprisalMatrix::row_of(const ExampleId& id) const {
  const auto it = index_.find(id);
  if (it == index_.end())
    throw DataError("example " + id.to_string() + " not present in run " +
                    run_id_);
  return it->second;
}

bool SurprisalMatrix::contains(const ExampleId& id) const {
  return index_.contains(id);
}

SurprisalMatrix ingest_curves(const std::string& path) {
  io::BinaryReader r(path);
  r.expect_magic(kCurveMagic);
  const std::uint32_t version = r.u32();
  if (version != 1)
    throw DataError(path + ": unsupported curve file version " +
                    std::to_string(version));
  std::string run_id = r.str();
  const std::uint32_t n_checkpoints = r.u32();
  const std::uint64_t n_examples = r.u64();
  CheckpointGrid grid;
  grid.steps.resize(n_checkpoints);
  for (auto& s : grid.steps) s = static_cast<std::int64_t>(r.u64());
  std::vector<ExampleId> ids(n_examples);
  for (auto& id : ids) {
    id.sequence_index = r.u32();
    id.token_position = r.u32();
  }
  std::vector<float> values(n_examples * n_checkpoints);
  r.bytes(values.data(), values.size() * sizeof(float));
  return SurprisalMatrix(std::move(run_id), std::move(grid), std::move(ids),
                         std::move(values));
}

void write_curves(const std::string& path, const SurprisalMatrix& m) {
  io::BinaryWriter w(path);
  w.magic(kCurveMagic);
  w.u32(1);
  w.str(m.run_id());
  w.u32(static_cast<std::uint32_t>(m.n_checkpoints()));
  w.u64(m.n_examples());
  for (std::int64_t s : m.grid().steps) w.u64(static_cast<std::uint64_t>(s));
  for (const auto& id : m.example_ids()) {
    w.u32(id.sequence_index);
    w.u32(id.token_position);
  }
  w.bytes(m.values().data(), m.values().size() * sizeof(float));
  w.close();
}

double chance_surprisal(std::uint64_t vocab_size) {
  if (vocab_size < 2) throw ConfigError("chance surprisal needs vocab_size >= 2");
  return std::log2(static_cast<double>(vocab_size));
}

double raw_curve_distance(std::span<const double> a,
                          std::span<const double> b) {
  if (a.size() != b.size())
    throw DataError("curve distance: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

namespace {

double sq_distance_f(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

double rank_of_row(const SurprisalMatrix& run_a, const SurprisalMatrix& run_b,
                   std::uint64_t row_a, std::uint64_t row_b) {
  const auto anchor = run_a.row(row_a);
  const double self_d = sq_distance_f(anchor, run_b.row(row_b));
  std::uint64_t farther = 0;
  std::uint64_t tied = 0;
  for (std::uint64_t e = 0; e < run_b.n_examples(); ++e) {
    if (e == row_b) continue;
    const double d = sq_distance_f(anchor, run_b.row(e));
    if (d > self_d)
      ++farther;
    else if (d == self_d)
      ++tied;
  }
  const std::uint64_t others = run_b.n_examples() - 1;
  if (others == 0) throw DataError("nearest-neighbor rank needs >= 2 examples");
  return (static_cast<double>(farther) + 0.5 * static_cast<double>(tied)) /
         static_cast<double>(others);
}

}  // namespace

double nearest_neighbor_rank(const ExampleId& example,
                             const SurprisalMatrix& run_a,
                             const SurprisalMatrix& run_b) {
  if (run_a.grid().size() != run_b.grid().size())
    throw DataError("nearest-neighbor rank: grid length mismatch");
  return rank_of_row(run_a, run_b, run_a.row_of(example),
                     run_b.row_of(example));
}

std::vector<double> nearest_neighbor_ranks_serial(
    const SurprisalMatrix& run_a, const SurprisalMatrix& run_b) {
  if (run_a.grid().size() != run_b.grid().size())
    throw DataError("nearest-neighbor rank: grid length mismatch");
  std::vector<double> ranks(run_a.n_examples());
  for (std::uint64_t i = 0; i < run_a.n_examples(); ++i)
    ranks[i] = rank_of_row(run_a, run_b, i, run_b.row_of(run_a.example_ids()[i]));
  return ranks;
}

std::vector<double> nearest_neighbor_ranks(const SurprisalMatrix& run_a,
                                           const SurprisalMatrix& run_b) {
  if (run_a.grid().size() != run_b.grid().size())
    throw DataError("nearest-neighbor rank: grid length mismatch");
  std::vector<double> ranks(run_a.n_examples());
  parallel_for(static_cast<std::int64_t>(run_a.n_examples()), [&](std::int64_t i) {
    const auto u = static_cast<std::uint64_t>(i);
    ranks[u] = rank_of_row(run_a, run_b, u, run_b.row_of(run_a.example_ids()[u]));
  });
  return ranks;
}

std::vector<double> nearest_neighbor_ranks_values(
    std::span<const std::vector<double>> a,
    std::span<const std::vector<double>> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw DataError("nearest-neighbor rank: needs aligned rows, >= 2 examples");
  const std::size_t n = a.size();
  std::vector<double> ranks(n);
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t i) {
    const auto u = static_cast<std::size_t>(i);
    double self_d = 0.0;
    for (std::size_t k = 0; k < a[u].size(); ++k) {
      const double d = a[u][k] - b[u][k];
      self_d += d * d;
    }
    std::size_t farther = 0, tied = 0;
    for (std::size_t e = 0; e < n; ++e) {
      if (e == u) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < a[u].size(); ++k) {
        const double d = a[u][k] - b[e][k];
        d2 += d * d;
      }
      if (d2 > self_d)
        ++farther;
      else if (d2 == self_d)
        ++tied;
    }
    ranks[u] = (static_cast<double>(farther) + 0.5 * static_cast<double>(tied)) /
               static_cast<double>(n - 1);
  });
  return ranks;
}

}  // namespace curvescope::curves
