// Command-line front end for the Monte Carlo engine.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcawald/errors.hpp"
#include "pcawald/inference.hpp"
#include "pcawald/io.hpp"
#include "pcawald/mc.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitPrecondition = 2;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "override base_seed");
  cmd->add_option("--reps", opts.reps, "override reps");
  cmd->add_option("-o,--out-dir", opts.out_dir, "output directory");
}

pcawald::ExperimentConfig load_config(const CommonOptions& opts) {
  std::ifstream in(opts.config_path);
  if (!in) throw pcawald::PreconditionError("cannot open config " + opts.config_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw pcawald::PreconditionError(std::string("config is not valid JSON: ") + e.what());
  }
  auto config = pcawald::config_from_json(doc);
  if (opts.seed) config.base_seed = *opts.seed;
  if (opts.reps) config.reps = *opts.reps;
  return config;
}

bool is_simulation(pcawald::Mode mode) {
  using pcawald::Mode;
  return mode == Mode::ks_gaussian || mode == Mode::ks_chisq || mode == Mode::coverage;
}

void print_summary(const pcawald::ExperimentSummary& s) {
  using pcawald::Mode;
  std::cout << "mode: " << pcawald::mode_name(s.config.mode) << "\n";
  switch (s.config.mode) {
    case Mode::ks_gaussian:
    case Mode::ks_chisq:
    case Mode::coverage:
      std::cout << "reps: " << s.replications.size() << "  df: " << s.df << "\n"
                << "ks_distance (" << s.ks_reference << "): " << s.ks_distance << "\n"
                << "coverage: " << s.empirical_coverage << "\n"
                << "normalized mean/var: " << s.mean_normalized << " / " << s.var_normalized << "\n";
      break;
    case Mode::bias_sweep:
      for (const auto& row : s.bias_table) {
        std::cout << "n=" << row.n << " p=" << row.p << " bias=" << row.bias << " (se " << row.bias_se
                  << ") ratio=" << row.ratio << "\n";
      }
      break;
    case Mode::perturb_check:
      std::cout << "checks: " << s.bound_records.size() << "  violations: " << s.bound_violations << "\n";
      break;
    case Mode::opnorm_check:
      for (const auto& row : s.opnorm) {
        std::cout << "n=" << row.n << " ratio=" << row.ratio << " (se " << row.ratio_se << ")\n";
      }
      break;
  }
  std::cout << "runtime: " << s.runtime_seconds << " s\n";
}

int run_mode(const CommonOptions& opts, std::optional<pcawald::Mode> forced) {
  auto config = load_config(opts);
  if (forced) {
    config.mode = *forced;
  } else if (!is_simulation(config.mode)) {
    throw pcawald::PreconditionError("simulate expects mode ks_gaussian, ks_chisq or coverage");
  }
  const auto summary = pcawald::run(config);
  pcawald::write_outputs(summary, opts.out_dir);
  print_summary(summary);
  if (config.mode == pcawald::Mode::perturb_check && summary.bound_violations > 0) return kExitFailure;
  return EXIT_SUCCESS;
}

int run_assumptions(const CommonOptions& opts, double gamma, double c_proxy) {
  const auto config = load_config(opts);
  const auto model = pcawald::build_model(config.model);
  if (config.r < 1 || config.r > model.num_clusters()) throw pcawald::PreconditionError("cluster index r out of range");
  if (config.n < 1) throw pcawald::PreconditionError("n must be >= 1");
  const auto report = pcawald::check_assumptions(model, config.r, config.n, gamma, c_proxy);
  const auto doc = pcawald::to_json(report);
  auto out = pcawald::open_output(std::filesystem::path(opts.out_dir) / "assumptions.json");
  out << doc.dump(2) << '\n';
  std::cout << doc.dump(2) << '\n';
  return EXIT_SUCCESS;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wald statistics for spectral projectors: Monte Carlo experiments"};
  app.require_subcommand(1);

  CommonOptions simulate_opts, bias_opts, perturb_opts, opnorm_opts, assumption_opts;
  auto* simulate = app.add_subcommand("simulate", "run ks_gaussian, ks_chisq or coverage replications");
  add_common(simulate, simulate_opts);
  auto* bias = app.add_subcommand("bias-sweep", "estimate E[raw] - df over an n/p grid");
  add_common(bias, bias_opts);
  auto* perturb = app.add_subcommand("perturb-check", "check the perturbation bounds on random E");
  add_common(perturb, perturb_opts);
  auto* opnorm = app.add_subcommand("opnorm-check", "operator-norm concentration of the sample covariance");
  add_common(opnorm, opnorm_opts);
  auto* assumptions = app.add_subcommand("assumptions", "report the in-scope conditions for a model");
  add_common(assumptions, assumption_opts);
  double gamma = 0.5;
  double c_proxy = 1.0;
  assumptions->add_option("--gamma", gamma, "gap slack in (0, 1)")->check(CLI::Range(0.0, 1.0));
  assumptions->add_option("--c-proxy", c_proxy, "constant for the lambda_min condition")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitPrecondition;
  }

  try {
    using pcawald::Mode;
    if (*simulate) return run_mode(simulate_opts, std::nullopt);
    if (*bias) return run_mode(bias_opts, Mode::bias_sweep);
    if (*perturb) return run_mode(perturb_opts, Mode::perturb_check);
    if (*opnorm) return run_mode(opnorm_opts, Mode::opnorm_check);
    if (*assumptions) return run_assumptions(assumption_opts, gamma, c_proxy);
  } catch (const pcawald::PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
