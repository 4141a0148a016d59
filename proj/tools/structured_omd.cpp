// structured-omd: regret experiments, bound tables and lower-bound games.
//
// Exit codes: 0 success, 1 configuration or argument error, 2 solver failure.

#include "somd/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace somd;
using namespace somd::harness;

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<Index> trials;
  std::optional<std::string> out;
  std::optional<std::string> format;
};

int cmd_run(const RunArgs& args) {
  ExperimentConfig cfg = load_config(args.config);
  if (!cfg.sweep_spaces.empty()) throw ConfigError(args.config + " describes a sweep; use the sweep subcommand");
  if (args.seed) cfg.seed = *args.seed;
  if (args.trials) {
    if (*args.trials < 1) throw ConfigError("--trials must be positive");
    cfg.trials = *args.trials;
  }
  if (args.out) cfg.output_path = *args.out;
  if (args.format) cfg.format = *args.format == "json" ? OutputFormat::kJson : OutputFormat::kCsv;
  const RunRecord rec = run_experiment(cfg);
  emit_report(rec, cfg.output_path, cfg.format);
  std::fprintf(stderr, "%s vs %s: mean regret %.6g, max %.6g, bound %.6g (%s), violations %lld/%zu\n",
               rec.learner.c_str(), rec.space.c_str(), rec.mean_final_regret, rec.max_final_regret, rec.bound,
               rec.formula.c_str(), static_cast<long long>(rec.violations), rec.trials.size());
  return 0;
}

int cmd_bound(const std::string& space_text, Index horizon, Index n, std::uint64_t space_seed) {
  if (horizon < 1) throw ConfigError("--T must be positive");
  const LossSpaceSpec space = parse_space(space_text, n, space_seed);
  const BoundRecipe b = theoretical_bound(space, horizon);
  const Certificate& c = b.regularizer.certificate();
  std::cout << "space,N,T,formula,bound,regularizer,D_squared,alpha,G,generic_bound\n";
  std::cout << '"' << space.describe() << "\"," << n << ',' << horizon << ",\"" << b.formula << "\","
            << format_real(b.upper) << ",\"" << b.regularizer.describe() << "\"," << format_real(c.D_squared) << ','
            << format_real(c.alpha) << ',' << format_real(c.G) << ',' << format_real(generic_bound(c, horizon))
            << '\n';
  return 0;
}

struct LowerArgs {
  std::optional<Index> V;
  std::optional<double> s;
  std::optional<std::string> preset;
  Index N = 0;
  Index T = 0;
  Index trials = 1;
  std::uint64_t seed = 0;
  std::string out = "-";
};

int cmd_lowerbound(const LowerArgs& args) {
  Index v = 0;
  double s = 1.0;
  if (args.preset) {
    if (args.V || args.s) throw ConfigError("--preset excludes --V and --s");
    const AdversaryPreset p = adversary_preset(*args.preset);
    v = p.V;
    s = p.s;
  } else {
    if (!args.V) throw ConfigError("lowerbound needs --V or --preset");
    v = *args.V;
    if (args.s) s = *args.s;
  }
  const LowerBoundSummary summary = run_lower_bound(v, s, args.N, args.T, args.trials, args.seed);
  with_output(args.out, [&](std::ostream& out) { write_lower_bound_csv(summary, out); });
  std::fprintf(stderr, "mean regret %.6g +- %.3g, floor %.6g, predicted %.6g\n", summary.mean,
               summary.standard_error, summary.floor, summary.predicted);
  return 0;
}

int cmd_sweep(const std::string& path) {
  const ExperimentConfig cfg = load_config(path);
  const auto rows = run_sweep(cfg);
  with_output(cfg.output_path, [&](std::ostream& out) { write_sweep_csv(rows, out); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured online mirror descent experiments"};
  app.name("structured-omd");
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run regret experiments from a configuration file");
  run->add_option("--config", run_args.config, "Configuration file")->required();
  run->add_option("--seed", run_args.seed, "Base seed; trial i uses seed + i");
  run->add_option("--trials", run_args.trials, "Number of trials");
  run->add_option("--out", run_args.out, "Output path, '-' for stdout");
  run->add_option("--format", run_args.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  std::string space_text;
  Index bound_t = 0;
  Index bound_n = 64;
  std::uint64_t space_seed = 0;
  auto* bound = app.add_subcommand("bound", "Print the closed-form regret bound of a loss space");
  bound->add_option("--space", space_text, "Loss space description")->required();
  bound->add_option("--T", bound_t, "Horizon")->required();
  bound->add_option("--N", bound_n, "Number of experts")->default_val(64);
  bound->add_option("--space-seed", space_seed, "Seed of the random geometry")->default_val(0);

  LowerArgs lower_args;
  auto* lower = app.add_subcommand("lowerbound", "Play the hypercube adversary against Hedge");
  lower->add_option("--V", lower_args.V, "Hypercube dimension");
  lower->add_option("--s", lower_args.s, "Loss scale (default 1)");
  lower->add_option("--preset", lower_args.preset,
                    "Named (V, s): vc(V,s) sparse(k,s) lp(p,s) noisy(eps) lowrank(d) noisy_lowrank(d,eps) "
                    "noisy_sparse(k,eps)");
  lower->add_option("--N", lower_args.N, "Number of experts")->required();
  lower->add_option("--T", lower_args.T, "Horizon")->required();
  lower->add_option("--trials", lower_args.trials, "Number of games")->default_val(1);
  lower->add_option("--seed", lower_args.seed, "Base seed; game i uses seed + i")->default_val(0);
  lower->add_option("--out", lower_args.out, "Output path, '-' for stdout")->default_val("-");

  std::string sweep_path;
  auto* sweep = app.add_subcommand("sweep", "Run a grid of experiments and print one summary row each");
  sweep->add_option("--config", sweep_path, "Configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*bound) return cmd_bound(space_text, bound_t, bound_n, space_seed);
    if (*lower) return cmd_lowerbound(lower_args);
    if (*sweep) return cmd_sweep(sweep_path);
  } catch (const SolverError& e) {
    std::fprintf(stderr, "structured-omd: solver failure: %s\n", e.what());
    return 2;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "structured-omd: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "structured-omd: %s\n", e.what());
    return 1;
  }
  return 1;
}
