#include "curvescope/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "curvescope/errors.hpp"
#include "curvescope/features.hpp"
#include "curvescope/rng.hpp"
#include "curvescope/threads.hpp"

namespace curvescope::synth {

void CurveSpec::validate() const {
  if (floor > ceiling) throw ConfigError("curve spec: floor above ceiling");
  if (noise_std < 0.0) throw ConfigError("curve spec: negative noise std");
  if (family == CurveFamily::kSigmoidSpike && spike_width <= 0.0)
    throw ConfigError("curve spec: spike width must be > 0");
}

double curve_value(const CurveSpec& spec, double x) {
  switch (spec.family) {
    case CurveFamily::kConstant:
      return spec.floor;
    case CurveFamily::kMonotone: {
      // Linear descent from ceiling to floor between midpoint-1 and
      // midpoint+1, clamped outside.
      const double t = std::clamp(0.5 * (x - spec.midpoint + 1.0), 0.0, 1.0);
      return spec.ceiling - (spec.ceiling - spec.floor) * t;
    }
    case CurveFamily::kSigmoid:
    case CurveFamily::kSigmoidSpike: {
      double v = spec.ceiling -
                 (spec.ceiling - spec.floor) /
                     (1.0 + std::exp(-spec.slope * (x - spec.midpoint)));
      if (spec.family == CurveFamily::kSigmoidSpike) {
        const double d = (x - spec.spike_position) / spec.spike_width;
        v += spec.spike_height * std::exp(-0.5 * d * d);
      }
      return v;
    }
  }
  throw ConfigError("curve spec: unknown family");
}

SurprisalMatrix generate_run(const std::vector<CurveSpec>& specs,
                             const std::vector<ExampleId>& ids,
                             const CheckpointGrid& grid,
                             const std::string& run_id, std::uint64_t seed) {
  if (specs.empty()) throw ConfigError("generate_run: no curve specs");
  if (ids.size() != specs.size())
    throw ConfigError("generate_run: ids/specs size mismatch");
  grid.validate();
  for (const auto& s : specs) s.validate();

  const std::size_t C = grid.size();
  std::vector<float> values(specs.size() * C);
  parallel_for(static_cast<std::int64_t>(specs.size()), [&](std::int64_t e) {
    const auto u = static_cast<std::size_t>(e);
    const CurveSpec& spec = specs[u];
    for (std::size_t c = 0; c < C; ++c) {
      const std::int64_t step = grid.steps[c];
      double v = step == 0 ? spec.ceiling
                           : curve_value(spec, std::log10(static_cast<double>(step)));
      if (spec.noise_std > 0.0) {
        CounterRng rng(derive_seed(seed, spec.seed),
                       static_cast<std::uint64_t>(u) * C + c);
        v += spec.noise_std * rng.next_gaussian();
      }
      values[u * C + c] = static_cast<float>(std::max(v, 0.0));
    }
  });
  return SurprisalMatrix(run_id, grid, ids, std::move(values));
}

void CohortPlan::validate() const {
  schedule_params.validate();
  if (vocab_size < 2) throw ConfigError("cohort plan: vocab_size must be >= 2");
  if (sequence_length < 2)
    throw ConfigError("cohort plan: sequence_length must be >= 2");
  if (n_sequences == 0) throw ConfigError("cohort plan: n_sequences must be >= 1");
  if (examples_per_sequence == 0 ||
      examples_per_sequence > sequence_length - 1)
    throw ConfigError("cohort plan: examples_per_sequence outside [1, seq_len-1]");
  if (n_runs == 0) throw ConfigError("cohort plan: n_runs must be >= 1");
  if (floor_hi < floor_lo || midpoint_hi < midpoint_lo || noise_hi < noise_lo ||
      spike_prob_hi < spike_prob_lo)
    throw ConfigError("cohort plan: effect ranges must be non-decreasing");
  const double chance = curves::chance_surprisal(vocab_size);
  if (floor_hi >= chance)
    throw ConfigError("cohort plan: floor_hi must stay below chance surprisal");
}

Cohort generate_cohort(const CohortPlan& plan, std::uint64_t seed) {
  plan.validate();

  // Zipf-distributed token draws, keyed per sequence.
  std::vector<double> cdf(plan.vocab_size);
  double acc = 0.0;
  for (std::uint32_t k = 0; k < plan.vocab_size; ++k) {
    acc += 1.0 / std::pow(static_cast<double>(k + 1), plan.zipf_exponent);
    cdf[k] = acc;
  }
  for (double& v : cdf) v /= acc;

  const std::uint64_t corpus_seed = derive_seed(seed, hash_name("corpus"));
  std::vector<corpus::TokenId> tokens(plan.n_sequences * plan.sequence_length);
  parallel_for(static_cast<std::int64_t>(plan.n_sequences), [&](std::int64_t s) {
    CounterRng rng(corpus_seed, static_cast<std::uint64_t>(s));
    for (std::uint32_t i = 0; i < plan.sequence_length; ++i) {
      const double u = rng.next_double();
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      tokens[static_cast<std::uint64_t>(s) * plan.sequence_length + i] =
          static_cast<corpus::TokenId>(it - cdf.begin());
    }
  });
  corpus::Corpus corp =
      corpus::make_corpus(plan.vocab_size, plan.sequence_length, std::move(tokens));

  // Examples: fixed positions per sequence, sampled without replacement.
  const std::uint64_t pos_seed = derive_seed(seed, hash_name("positions"));
  std::vector<ExampleId> ids;
  ids.reserve(plan.n_sequences * plan.examples_per_sequence);
  for (std::uint64_t s = 0; s < plan.n_sequences; ++s) {
    CounterRng rng(pos_seed, s);
    std::vector<std::uint32_t> positions(plan.sequence_length - 1);
    for (std::uint32_t i = 0; i < positions.size(); ++i) positions[i] = i + 1;
    for (std::uint32_t i = 0; i < plan.examples_per_sequence; ++i) {
      const auto j = i + static_cast<std::uint32_t>(
                             rng.next_below(positions.size() - i));
      std::swap(positions[i], positions[j]);
    }
    std::vector<std::uint32_t> chosen(positions.begin(),
                                      positions.begin() + plan.examples_per_sequence);
    std::sort(chosen.begin(), chosen.end());
    for (std::uint32_t p : chosen)
      ids.push_back({static_cast<std::uint32_t>(s), p});
  }

  // Planted effect strengths scale with normalized inverse log-frequency.
  double lf_min = 0.0, lf_max = -1e300;
  std::vector<double> lf(ids.size());
  for (std::size_t e = 0; e < ids.size(); ++e) {
    const auto ex = features::resolve_example(corp.store, ids[e]);
    lf[e] = corp.stats.token_log_frequency(ex.target);
  }
  lf_min = *std::min_element(lf.begin(), lf.end());
  lf_max = *std::max_element(lf.begin(), lf.end());
  const double lf_span = lf_max > lf_min ? lf_max - lf_min : 1.0;

  const double chance = curves::chance_surprisal(plan.vocab_size);
  const std::uint64_t effect_seed = derive_seed(seed, hash_name("effects"));

  Cohort cohort{std::move(corp), {}, {}, {}};
  cohort.truth.ids = ids;
  cohort.truth.log_freq = lf;
  cohort.truth.floor.resize(ids.size());
  cohort.truth.midpoint.resize(ids.size());
  cohort.truth.noise_std.resize(ids.size());
  cohort.truth.spiked.resize(ids.size());

  std::vector<CurveSpec> specs(ids.size());
  for (std::size_t e = 0; e < ids.size(); ++e) {
    CounterRng rng(effect_seed, e);
    const double u = (lf_max - lf[e]) / lf_span;  // 0 frequent, 1 rare
    CurveSpec spec;
    spec.ceiling = chance;
    spec.floor = plan.floor_lo + (plan.floor_hi - plan.floor_lo) * u;
    spec.midpoint =
        plan.midpoint_lo + (plan.midpoint_hi - plan.midpoint_lo) * u;
    spec.slope = plan.slope;
    spec.noise_std = plan.noise_lo + (plan.noise_hi - plan.noise_lo) * u;
    const double p_spike =
        plan.spike_prob_lo + (plan.spike_prob_hi - plan.spike_prob_lo) * u;
    const bool spiked = rng.next_double() < p_spike;
    if (spiked && plan.spike_height > 0.0) {
      spec.family = CurveFamily::kSigmoidSpike;
      spec.spike_position = plan.spike_position;
      spec.spike_height = plan.spike_height;
      spec.spike_width = plan.spike_width;
    }
    spec.seed = e;
    specs[e] = spec;
    cohort.truth.floor[e] = spec.floor;
    cohort.truth.midpoint[e] = spec.midpoint;
    cohort.truth.noise_std[e] = spec.noise_std;
    cohort.truth.spiked[e] = spiked;
  }

  const auto checkpoints = schedule::generate_schedule(plan.schedule_params);
  cohort.grid.steps.reserve(checkpoints.size());
  for (const auto& cp : checkpoints) cohort.grid.steps.push_back(cp.step);

  cohort.runs.reserve(plan.n_runs);
  for (std::uint32_t r = 0; r < plan.n_runs; ++r) {
    const std::string run_id = "synth-run-" + std::to_string(r + 1);
    cohort.runs.push_back(generate_run(
        specs, ids, cohort.grid, run_id,
        derive_seed(seed, hash_name("run") ^ (r + 1))));
  }
  return cohort;
}

void write_synthetic_pos(const std::string& path,
                         const std::vector<ExampleId>& ids, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  const auto& tags = features::upos_inventory();
  const auto& wps = features::word_position_inventory();
  const std::uint64_t pos_seed = derive_seed(seed, hash_name("pos"));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    CounterRng rng(pos_seed, i);
    out << ids[i].sequence_index << '\t' << ids[i].token_position << '\t'
        << tags[rng.next_below(tags.size())] << '\t'
        << wps[rng.next_below(wps.size())] << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

void write_truth_tsv(const std::string& path, const CohortTruth& truth) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "example_id\tlog_freq\tfloor\tmidpoint\tnoise_std\tspiked\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < truth.ids.size(); ++i) {
    out << truth.ids[i].to_string() << '\t' << fmt(truth.log_freq[i]) << '\t'
        << fmt(truth.floor[i]) << '\t' << fmt(truth.midpoint[i]) << '\t'
        << fmt(truth.noise_std[i]) << '\t' << (truth.spiked[i] ? 1 : 0)
        << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace curvescope::synth
