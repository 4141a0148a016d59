#pragma once

// Upper-bound experiments over sampled loss sequences and Monte Carlo games
// against the hypercube adversary. Trials run on a worker pool; results are
// reduced in trial order so output does not depend on scheduling.

#include "somd/core.hpp"
#include "somd/harness/config.hpp"
#include "somd/loss_spaces.hpp"
#include "somd/omd.hpp"
#include "somd/random.hpp"
#include "somd/regularizers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace somd::harness {

struct TrialRecord {
  std::uint64_t seed = 0;
  std::vector<double> regret;
  std::vector<double> bound;
  double final_regret = 0.0;
  bool bound_satisfied = false;

  bool operator==(const TrialRecord&) const = default;
};

struct RunRecord {
  std::string space;
  std::string learner;
  std::string formula;
  double eta = 0.0;
  /// Bound at the full horizon.
  double bound = 0.0;
  std::vector<TrialRecord> trials;
  double mean_final_regret = 0.0;
  double max_final_regret = 0.0;
  Index violations = 0;

  bool operator==(const RunRecord&) const = default;
};

/// Worker count: hardware concurrency, capped by STRUCTURED_OMD_THREADS.
inline unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("STRUCTURED_OMD_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Calls job(i) for i in [0, count) on a worker pool. The exception of the
/// lowest failing index is rethrown.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = worker_count(count);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Learner, rate and bound resolved from a configuration.
struct ResolvedExperiment {
  LossSpaceSpec space;
  BoundRecipe bound;
  Algorithm algorithm = Algorithm::kOmd;
  Regularizer regularizer;
  double eta = 0.0;
  std::string learner;
};

inline ResolvedExperiment resolve(const ExperimentConfig& cfg) {
  if (cfg.N < 1 || cfg.T < 1 || cfg.trials < 1) throw ConfigError("N, T and trials must be positive");
  LossSpaceSpec space = parse_space(cfg.space, cfg.N, cfg.space_seed);
  BoundRecipe bound = theoretical_bound(space, cfg.T);
  Regularizer reg = bound.regularizer;
  if (cfg.algorithm == Algorithm::kHedge) {
    reg = Regularizer::neg_entropy(cfg.N);
  } else if (cfg.regularizer != "auto") {
    reg = parse_regularizer(cfg.regularizer, cfg.N);
  }
  const double eta = cfg.eta ? *cfg.eta : optimal_rate(reg.certificate(), cfg.T);
  std::string learner = cfg.algorithm == Algorithm::kHedge ? "hedge" : "omd[" + reg.describe() + "]";
  return {std::move(space), std::move(bound), cfg.algorithm, std::move(reg), eta, std::move(learner)};
}

inline TrialRecord run_trial(const ResolvedExperiment& ex, Index horizon, double persistence, std::uint64_t seed) {
  Rng rng(seed);
  const LossSequence seq = sample_sequence(ex.space, horizon, rng, persistence);
  const RunResult result =
      ex.algorithm == Algorithm::kHedge ? hedge(ex.eta, seq) : run(ex.regularizer, ex.eta, seq);
  TrialRecord rec;
  rec.seed = seed;
  rec.regret = result.report.per_round_regret;
  // Every catalogued bound has the form c sqrt(t).
  const double c = ex.bound.upper / std::sqrt(static_cast<double>(horizon));
  rec.bound.resize(static_cast<std::size_t>(horizon));
  for (Index t = 1; t <= horizon; ++t) rec.bound[static_cast<std::size_t>(t - 1)] = c * std::sqrt(static_cast<double>(t));
  rec.final_regret = result.report.regret;
  rec.bound_satisfied = rec.final_regret <= ex.bound.upper;
  return rec;
}

inline void summarize(RunRecord& rec) {
  double sum = 0.0;
  rec.max_final_regret = rec.trials.empty() ? 0.0 : rec.trials.front().final_regret;
  rec.violations = 0;
  for (const auto& t : rec.trials) {
    sum += t.final_regret;
    rec.max_final_regret = std::max(rec.max_final_regret, t.final_regret);
    if (!t.bound_satisfied) ++rec.violations;
  }
  rec.mean_final_regret = rec.trials.empty() ? 0.0 : sum / static_cast<double>(rec.trials.size());
}

/// Runs cfg.trials independent trials; trial i uses seed cfg.seed + i.
inline RunRecord run_experiment(const ExperimentConfig& cfg) {
  const ResolvedExperiment ex = resolve(cfg);
  RunRecord rec;
  rec.space = ex.space.describe();
  rec.learner = ex.learner;
  rec.formula = ex.bound.formula;
  rec.eta = ex.eta;
  rec.bound = ex.bound.upper;
  rec.trials.resize(static_cast<std::size_t>(cfg.trials));
  parallel_for(rec.trials.size(), [&](std::size_t i) {
    rec.trials[i] = run_trial(ex, cfg.T, cfg.persistence, cfg.seed + i);
  });
  summarize(rec);
  return rec;
}

// ---------------------------------------------------------------------------
// Lower-bound games.

struct LowerBoundSummary {
  Index V = 0;
  double s = 0.0;
  Index N = 0;
  Index T = 0;
  Index block_length = 0;
  double eta = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> regrets;
  double mean = 0.0;
  double standard_error = 0.0;
  /// 2 s sqrt(V T / 8).
  double floor = 0.0;
  /// 2 s V E|Bin(k, 1/2) - k/2|.
  double predicted = 0.0;
  std::string formula;
};

/// Hedge with rate sqrt(2 ln N / T) against the adversary; trial i uses
/// seed + i.
inline LowerBoundSummary run_lower_bound(Index v, double s, Index n, Index horizon, Index trials,
                                         std::uint64_t seed = 0) {
  if (trials < 1) throw InvalidArgument("lowerbound: trials must be positive");
  const AdversaryState probe = adversary_new(v, s, n, horizon, seed);
  LowerBoundSummary out;
  out.V = v;
  out.s = s;
  out.N = n;
  out.T = horizon;
  out.block_length = probe.block_length;
  out.eta = std::sqrt(2.0 * std::log(static_cast<double>(n)) / static_cast<double>(horizon));
  out.seeds.resize(static_cast<std::size_t>(trials));
  out.regrets.resize(static_cast<std::size_t>(trials));
  parallel_for(out.regrets.size(), [&](std::size_t i) {
    const std::uint64_t trial_seed = seed + i;
    AdversaryState st = adversary_new(v, s, n, horizon, trial_seed);
    Matrix rows(horizon, n);
    for (Index t = 0; t < horizon; ++t) rows.row(t) = adversary_next_loss(st).transpose();
    out.seeds[i] = trial_seed;
    out.regrets[i] = hedge(out.eta, LossSequence(std::move(rows))).report.regret;
  });
  double sum = 0.0;
  for (double r : out.regrets) sum += r;
  const double k = static_cast<double>(trials);
  out.mean = sum / k;
  double ss = 0.0;
  for (double r : out.regrets) ss += (r - out.mean) * (r - out.mean);
  out.standard_error = trials > 1 ? std::sqrt(ss / (k - 1.0) / k) : 0.0;
  out.floor = lower_bound_value(v, s, horizon);
  out.predicted = static_cast<double>(v) * 2.0 * s * expected_block_deviation(out.block_length);
  out.formula = "predicted = 2 s V E|Bin(k,1/2) - k/2|, k = floor(T/V); floor = 2 s sqrt(V T / 8)";
  return out;
}

/// Adversary parameters (V, s) for a named loss family.
struct AdversaryPreset {
  Index V = 0;
  double s = 0.0;
};

/// Presets: vc(V,s), sparse(k,s), lp(p,s), noisy(eps), lowrank(d),
/// noisy_lowrank(d,eps), noisy_sparse(k,eps).
inline AdversaryPreset adversary_preset(const std::string& text) {
  const detail::Term term = detail::parse_term(text);
  auto real = [&](const char* key, double fallback) {
    const auto* v = term.find(key);
    return v ? detail::parse_real(*v, term.name + "." + key) : fallback;
  };
  auto integer = [&](const char* key) { return detail::parse_positive(term.need(key), term.name + "." + key); };
  auto floor_ln = [](Index k) {
    const auto v = static_cast<Index>(std::floor(std::log(static_cast<double>(k))));
    if (v < 1) throw ConfigError("preset: ln k must be at least 1");
    return v;
  };
  if (term.name == "vc") {
    term.allow_only({"V", "s"});
    return {integer("V"), real("s", 1.0)};
  }
  if (term.name == "sparse") {
    term.allow_only({"k", "s"});
    return {floor_ln(integer("k")), real("s", 1.0)};
  }
  if (term.name == "lp") {
    term.allow_only({"p", "s"});
    return {integer("p"), real("s", 1.0) / 2.0};
  }
  if (term.name == "noisy") {
    term.allow_only({"eps"});
    return {1, std::sqrt(real("eps", 1.0) / 2.0)};
  }
  if (term.name == "lowrank") {
    term.allow_only({"d"});
    return {integer("d"), 1.0};
  }
  if (term.name == "noisy_lowrank") {
    term.allow_only({"d", "eps"});
    const Index d = integer("d");
    return {d, 1.0 + std::sqrt(real("eps", 1.0) / std::ldexp(1.0, static_cast<int>(d)))};
  }
  if (term.name == "noisy_sparse") {
    term.allow_only({"k", "eps"});
    const Index k = integer("k");
    return {floor_ln(k), 1.0 + std::sqrt(real("eps", 1.0) / static_cast<double>(k))};
  }
  throw ConfigError("unknown adversary preset '" + term.name + "'");
}

}  // namespace somd::harness
