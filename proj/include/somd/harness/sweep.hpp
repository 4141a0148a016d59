#pragma once

// Grid of experiments over spaces, N and T, reduced to one CSV row each.

#include "somd/harness/config.hpp"
#include "somd/harness/experiment.hpp"
#include "somd/harness/report.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace somd::harness {

struct SweepRow {
  std::string space;
  Index N = 0;
  Index T = 0;
  Index trials = 0;
  double mean_regret = 0.0;
  double max_regret = 0.0;
  double bound = 0.0;
  Index violations = 0;
};

/// One row per (space, N, T) in that nesting order. Unset grid axes fall
/// back to the single-experiment keys.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
  const std::vector<std::string> spaces = cfg.sweep_spaces.empty() ? std::vector<std::string>{cfg.space} : cfg.sweep_spaces;
  const std::vector<Index> ns = cfg.sweep_N.empty() ? std::vector<Index>{cfg.N} : cfg.sweep_N;
  const std::vector<Index> ts = cfg.sweep_T.empty() ? std::vector<Index>{cfg.T} : cfg.sweep_T;
  std::vector<SweepRow> rows;
  for (const auto& space : spaces) {
    for (Index n : ns) {
      for (Index t : ts) {
        ExperimentConfig one = cfg;
        one.space = space;
        one.N = n;
        one.T = t;
        const RunRecord rec = run_experiment(one);
        rows.push_back({space, n, t, cfg.trials, rec.mean_final_regret, rec.max_final_regret, rec.bound, rec.violations});
      }
    }
  }
  return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "space,N,T,trials,mean_regret,max_regret,bound,violations\n";
  for (const auto& r : rows) {
    out << '"' << r.space << '"' << ',' << r.N << ',' << r.T << ',' << r.trials << ',' << format_real(r.mean_regret)
        << ',' << format_real(r.max_regret) << ',' << format_real(r.bound) << ',' << r.violations << '\n';
  }
}

}  // namespace somd::harness
