#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cascade/errors.hpp"
#include "cascade/io.hpp"
#include "commands.hpp"

namespace {

using nlohmann::json;
namespace cli = cascade::cli;

int threads_from_env() {
  const char* env = std::getenv("CASCADE_RISK_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) return -1;  // flagged as a config error after parse
  return static_cast<int>(v);
}

// Config precedence: command-line flag > config-file key > built-in default.
template <typename T>
void cfg_get(const json& cfg, const CLI::App* cmd, const std::string& flag,
             const std::string& key, T& out) {
  if (!cfg.contains(key)) return;
  if (cmd->count(flag) > 0) return;
  out = cfg.at(key).get<T>();
}

void add_model_options(CLI::App* sub, cli::ModelOptions& m) {
  sub->add_option("--topology", m.topology,
                  "complete | star | path | pcycle | erdos_renyi | explicit");
  sub->add_option("--n", m.n, "number of agents");
  sub->add_option("--p", m.p, "pcycle neighbourhood radius");
  sub->add_option("--edge-prob", m.edge_prob, "erdos_renyi edge probability");
  sub->add_option("--graph-seed", m.graph_seed, "erdos_renyi draw seed");
  sub->add_option("--weights", m.weights_file, "explicit weight matrix (JSON rows)");
  sub->add_option("--tau", m.tau, "communication delay");
  sub->add_option("--b", m.b, "noise intensity");
}

void apply_model_config(const json& cfg, const CLI::App* sub, cli::ModelOptions& m) {
  cfg_get(cfg, sub, "--topology", "topology", m.topology);
  cfg_get(cfg, sub, "--n", "n", m.n);
  cfg_get(cfg, sub, "--p", "p", m.p);
  cfg_get(cfg, sub, "--edge-prob", "edge_prob", m.edge_prob);
  cfg_get(cfg, sub, "--graph-seed", "graph_seed", m.graph_seed);
  cfg_get(cfg, sub, "--weights", "weights", m.weights_file);
  cfg_get(cfg, sub, "--tau", "tau", m.tau);
  cfg_get(cfg, sub, "--b", "b", m.b);
}

void add_risk_options(CLI::App* sub, cli::RiskOptions& r) {
  sub->add_option("--c", r.c, "consensus tolerance");
  sub->add_option("--alpha", r.alpha, "level-set shape parameter");
  sub->add_option("--epsilon", r.epsilon, "risk confidence level");
  sub->add_option("--y-f", r.y_f, "default failure magnitude");
}

void apply_risk_config(const json& cfg, const CLI::App* sub, cli::RiskOptions& r) {
  cfg_get(cfg, sub, "--c", "c", r.c);
  cfg_get(cfg, sub, "--alpha", "alpha", r.alpha);
  cfg_get(cfg, sub, "--epsilon", "epsilon", r.epsilon);
  cfg_get(cfg, sub, "--y-f", "y_f", r.y_f);
}

int fail(const std::exception& e, int code) {
  std::cerr << "error: " << e.what() << '\n';
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  using namespace cascade;
  try {
    return fn();
  } catch (const StabilityViolation& e) { return fail(e, 2); }
    catch (const DomainViolation& e) { return fail(e, 2); }
    catch (const DomainError& e) { return fail(e, 2); }
    catch (const DisconnectedGraph& e) { return fail(e, 2); }
    catch (const SingularBlock& e) { return fail(e, 4); }
    catch (const DegenerateUpdate& e) { return fail(e, 4); }
    catch (const DegenerateCorrelation& e) { return fail(e, 4); }
    catch (const QuadratureFailure& e) { return fail(e, 3); }
    catch (const EigSolverFailure& e) { return fail(e, 3); }
    catch (const NumericalBlowup& e) { return fail(e, 3); }
    catch (const RetryExhausted& e) { return fail(e, 3); }
    catch (const Error& e) { return fail(e, 1); }
    catch (const nlohmann::json::exception& e) { return fail(e, 1); }
    catch (const std::exception& e) { return fail(e, 3); }
}

int missing_n(const CLI::App* sub) {
  std::cerr << "error: --n is required (flag or config file)\n\n" << sub->help();
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cascading-fluctuation risk analysis for delayed consensus networks"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags take precedence)");
  int threads = threads_from_env();
  app.add_option("--threads", threads, "worker cap for simulations and sweeps");

  cli::AnalyzeOptions aopt;
  CLI::App* analyze = app.add_subcommand("analyze", "spectrum, stability and covariance");
  analyze->fallthrough();
  add_model_options(analyze, aopt.model);
  analyze->add_option("--out", aopt.out_dir, "output directory");

  cli::ProfileOptions popt;
  CLI::App* profile = app.add_subcommand("profile", "per-agent cascading risk profile");
  profile->fallthrough();
  add_model_options(profile, popt.model);
  add_risk_options(profile, popt.risk);
  profile->add_option("--failures", popt.failures_file, "failure observations JSON file");
  profile->add_option("--fail-agent", popt.fail_agents, "failed agent (1-based, repeatable)");
  profile->add_option("--fail-value", popt.fail_values,
                      "observed value for the matching --fail-agent (default y_f)");
  profile->add_option("--out", popt.out_dir, "output directory");

  cli::UpdateOptions uopt;
  CLI::App* update = app.add_subcommand("update", "absorb one failure into a saved state");
  update->fallthrough();
  update->add_option("--state", uopt.state_file, "state file from profile or update");
  update->add_option("--agent", uopt.agent, "newly failed agent (1-based)");
  CLI::Option* value_opt = update->add_option("--value", uopt.value, "observed value (default y_f)");
  add_risk_options(update, uopt.risk);
  update->add_flag("--time-recompute", uopt.time_recompute,
                   "also time a from-scratch recondition for comparison");
  update->add_flag("--report-fit", uopt.report_fit,
                   "fit cost-growth exponents from the timing log and exit");
  update->add_option("--out", uopt.out_dir, "output directory");

  cli::BoundsOptions bopt;
  CLI::App* bounds = app.add_subcommand("bounds", "delay-induced covariance and risk limits");
  bounds->fallthrough();
  add_model_options(bounds, bopt.model);
  add_risk_options(bounds, bopt.risk);
  bounds->add_option("--domain", bopt.domain, "graph | uniform scaled-delay domain");
  bounds->add_option("--out", bopt.out_dir, "output directory");

  cli::ValidateOptions vopt;
  CLI::App* validate = app.add_subcommand("validate", "Monte-Carlo and bound check suites");
  validate->fallthrough();
  validate->add_option("--suite", vopt.suite, "covariance | conditional | tails | bounds | all");
  validate->add_option("--n", vopt.n, "network size (suite default if omitted)");
  validate->add_option("--graphs", vopt.graphs, "random graphs for the bounds sweep");
  validate->add_option("--samples", vopt.samples, "Monte-Carlo draws per check");
  validate->add_option("--seed", vopt.seed, "master seed");
  validate->add_option("--tau", vopt.model.tau, "communication delay");
  validate->add_option("--b", vopt.model.b, "noise intensity");
  add_risk_options(validate, vopt.risk);
  validate->add_option("--out", vopt.out_dir, "output directory");

  cli::SweepOptions sopt;
  CLI::App* sweep = app.add_subcommand("sweep", "risk vs failure count or location");
  sweep->fallthrough();
  add_model_options(sweep, sopt.model);
  add_risk_options(sweep, sopt.risk);
  sweep->add_option("--mode", sopt.mode, "count | location");
  sweep->add_option("--target", sopt.target, "assessed agent (1-based, default n)");
  sweep->add_option("--max-m", sopt.max_m, "count mode: largest failure set");
  sweep->add_option("--out", sopt.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 1;
  }

  return guarded([&]() -> int {
    json cfg = json::object();
    if (app.count("--config") > 0) cfg = cascade::io::read_json_file(config_path);
    cfg_get(cfg, &app, "--threads", "threads", threads);
    if (threads < 1) throw cascade::InvalidSpec("--threads (or CASCADE_RISK_THREADS) must be >= 1");

    if (analyze->parsed()) {
      apply_model_config(cfg, analyze, aopt.model);
      cfg_get(cfg, analyze, "--out", "out", aopt.out_dir);
      if (aopt.model.n < 0) return missing_n(analyze);
      return cli::cmd_analyze(aopt);
    }
    if (profile->parsed()) {
      apply_model_config(cfg, profile, popt.model);
      apply_risk_config(cfg, profile, popt.risk);
      cfg_get(cfg, profile, "--failures", "failures", popt.failures_file);
      cfg_get(cfg, profile, "--out", "out", popt.out_dir);
      if (popt.model.n < 0) return missing_n(profile);
      return cli::cmd_profile(popt);
    }
    if (update->parsed()) {
      apply_risk_config(cfg, update, uopt.risk);
      cfg_get(cfg, update, "--state", "state", uopt.state_file);
      cfg_get(cfg, update, "--agent", "agent", uopt.agent);
      cfg_get(cfg, update, "--value", "value", uopt.value);
      cfg_get(cfg, update, "--out", "out", uopt.out_dir);
      uopt.value_given = value_opt->count() > 0 || cfg.contains("value");
      if (!uopt.value_given) uopt.value = uopt.risk.y_f;
      return cli::cmd_update(uopt);
    }
    if (bounds->parsed()) {
      apply_model_config(cfg, bounds, bopt.model);
      apply_risk_config(cfg, bounds, bopt.risk);
      cfg_get(cfg, bounds, "--domain", "domain", bopt.domain);
      cfg_get(cfg, bounds, "--out", "out", bopt.out_dir);
      return cli::cmd_bounds(bopt);
    }
    if (validate->parsed()) {
      apply_risk_config(cfg, validate, vopt.risk);
      cfg_get(cfg, validate, "--suite", "suite", vopt.suite);
      cfg_get(cfg, validate, "--n", "n", vopt.n);
      cfg_get(cfg, validate, "--graphs", "graphs", vopt.graphs);
      cfg_get(cfg, validate, "--samples", "samples", vopt.samples);
      cfg_get(cfg, validate, "--seed", "seed", vopt.seed);
      cfg_get(cfg, validate, "--tau", "tau", vopt.model.tau);
      cfg_get(cfg, validate, "--b", "b", vopt.model.b);
      cfg_get(cfg, validate, "--out", "out", vopt.out_dir);
      if (vopt.suite.empty())
        throw cascade::InvalidSpec("validate: --suite is required "
                                   "(covariance | conditional | tails | bounds | all)");
      vopt.threads = threads;
      return cli::cmd_validate(vopt);
    }
    apply_model_config(cfg, sweep, sopt.model);
    apply_risk_config(cfg, sweep, sopt.risk);
    cfg_get(cfg, sweep, "--mode", "mode", sopt.mode);
    cfg_get(cfg, sweep, "--target", "target", sopt.target);
    cfg_get(cfg, sweep, "--max-m", "max_m", sopt.max_m);
    cfg_get(cfg, sweep, "--out", "out", sopt.out_dir);
    if (sopt.model.n < 0) return missing_n(sweep);
    return cli::cmd_sweep(sopt);
  });
}
