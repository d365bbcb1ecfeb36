#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "cascade/covariance.hpp"
#include "cascade/errors.hpp"
#include "cascade/graph.hpp"
#include "cascade/io.hpp"
#include "cascade/montecarlo.hpp"
#include "cascade/numerics.hpp"
#include "cascade/risk.hpp"

namespace cascade::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

GraphSpec make_spec(const ModelOptions& m) {
  const Topology t = io::topology_from_name(m.topology);
  switch (t) {
    case Topology::Complete: return GraphSpec::complete(m.n);
    case Topology::Star: return GraphSpec::star(m.n);
    case Topology::Path: return GraphSpec::path(m.n);
    case Topology::PCycle: return GraphSpec::pcycle(m.n, m.p);
    case Topology::ErdosRenyi: return GraphSpec::erdos_renyi(m.n, m.edge_prob, m.graph_seed);
    case Topology::Explicit: {
      if (m.weights_file.empty())
        throw InvalidSpec("explicit topology needs --weights <matrix.json>");
      return GraphSpec::explicit_weights(io::matrix_from_json(io::read_json_file(m.weights_file)));
    }
  }
  throw InvalidSpec("unknown topology");
}

RiskParams make_params(const RiskOptions& r) {
  RiskParams p{r.c, r.alpha, r.epsilon};
  p.validate();
  return p;
}

json model_params_json(const ModelOptions& m, const GraphSpec& spec) {
  json j;
  j["graph"] = io::graph_spec_to_json(spec);
  j["tau"] = m.tau;
  j["b"] = m.b;
  return j;
}

json risk_params_json(const RiskOptions& r) {
  return json{{"c", r.c}, {"alpha", r.alpha}, {"epsilon", r.epsilon}, {"y_f", r.y_f}};
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

std::string sigma_long_csv(const Eigen::MatrixXd& s) {
  std::string out = "i,j,sigma\n";
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      out += std::to_string(i + 1);
      out += ',';
      out += std::to_string(j + 1);
      out += ',';
      out += io::format_double(s(i, j));
      out += '\n';
    }
  return out;
}

std::string level_text(const RiskLevel& lvl) {
  return lvl.branch == RiskBranch::Infinite ? "inf" : io::format_double(lvl.value);
}

RiskProfile profile_from_laws(int n, const std::vector<int>& observed, const LawCache& laws,
                              const RiskParams& params) {
  RiskProfile p;
  p.observed = observed;
  std::sort(p.observed.begin(), p.observed.end());
  p.per_agent.assign(static_cast<std::size_t>(n), RiskAssessment{});
  for (const TrackedLaw& t : laws)
    p.per_agent[static_cast<std::size_t>(t.law.target)] = assess(t.law, params);
  return p;
}

FailureObservation gather_failures(const ProfileOptions& opt, int n) {
  const bool inline_given = !opt.fail_agents.empty();
  if (!opt.failures_file.empty() && inline_given)
    throw InvalidSpec("give failures either as --failures <file> or as --fail-agent flags, not both");
  if (!opt.failures_file.empty())
    return io::observation_from_json(io::read_json_file(opt.failures_file), n);

  FailureObservation obs;
  obs.values = Eigen::VectorXd(static_cast<Eigen::Index>(opt.fail_agents.size()));
  if (opt.fail_values.size() > opt.fail_agents.size())
    throw InvalidSpec("more --fail-value entries than --fail-agent entries");
  for (std::size_t a = 0; a < opt.fail_agents.size(); ++a) {
    const int agent = opt.fail_agents[a];
    if (agent < 1 || agent > n) throw InvalidSpec("--fail-agent outside 1..n");
    obs.indices.push_back(agent - 1);
    obs.values(static_cast<Eigen::Index>(a)) =
        a < opt.fail_values.size() ? opt.fail_values[a] : opt.risk.y_f;
  }
  obs.validate(n);
  return obs;
}

void write_profile_artifacts(const std::string& dir, const RiskProfile& profile,
                             const json& manifest) {
  io::write_with_manifest(out_path(dir, "profile.csv"), io::profile_to_csv(profile), manifest);
  io::write_with_manifest(out_path(dir, "profile.json"), io::profile_to_json(profile).dump(2) + "\n",
                          manifest);
}

// One row of a validation report. pass iff metric <= tolerance.
struct Check {
  std::string name;
  double analytic = 0.0;
  double empirical = 0.0;
  double metric = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  json extra;

  static Check made(std::string name, double analytic, double empirical, double metric,
                    double tolerance, json extra = json::object()) {
    Check c{std::move(name), analytic, empirical, metric, tolerance, metric <= tolerance,
            std::move(extra)};
    return c;
  }
};

json check_to_json(const Check& c) {
  json j = c.extra;
  j["name"] = c.name;
  j["analytic"] = c.analytic;
  j["empirical"] = c.empirical;
  j["metric"] = c.metric;
  j["tolerance"] = c.tolerance;
  j["pass"] = c.pass;
  return j;
}

void covariance_suite(const ValidateOptions& opt, std::vector<Check>& out) {
  const int n = opt.n < 0 ? 5 : opt.n;
  const double tau = opt.model.tau;
  const struct { const char* label; GraphSpec spec; } cases[] = {
      {"complete", GraphSpec::complete(n)},
      {"path", GraphSpec::path(n)},
  };
  for (const auto& cs : cases) {
    const NetworkModel model = NetworkModel::make(cs.spec, tau, opt.model.b);
    const SteadyStateCovariance analytic = steady_state_covariance(model);

    SimConfig cfg;
    cfg.dt = tau / 50.0;
    cfg.horizon = 2000.0;
    cfg.burn_in = 50.0;
    cfg.trajectories = 8;
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;
    const EmpiricalCovariance emp = simulate_trajectories(model, cfg);

    const std::string label = cs.label;
    const Eigen::MatrixXd& a = analytic.sigma;
    const Eigen::MatrixXd& e = emp.sigma_hat;

    int wd = 0;
    double diag_err = -1.0;
    for (int i = 0; i < n; ++i) {
      const double rel = std::abs(e(i, i) - a(i, i)) / a(i, i);
      if (rel > diag_err) { diag_err = rel; wd = i; }
    }
    out.push_back(Check::made(label + "_diag_rel_err", a(wd, wd), e(wd, wd), diag_err, 0.05,
                              json{{"samples", emp.samples}}));

    // Complete off-diagonals share one magnitude so a relative metric is fair;
    // path off-diagonals cross zero, so measure in correlation units instead.
    int wi = 0, wj = 1;
    double off_err = -1.0;
    const bool relative = cs.spec.topology == Topology::Complete;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double scale = relative ? std::abs(a(i, j)) : std::sqrt(a(i, i) * a(j, j));
        const double err = std::abs(e(i, j) - a(i, j)) / scale;
        if (err > off_err) { off_err = err; wi = i; wj = j; }
      }
    out.push_back(Check::made(label + (relative ? "_offdiag_rel_err" : "_offdiag_corr_err"),
                              a(wi, wj), e(wi, wj), off_err, 0.10));

    double rowsum = 0.0;
    for (int i = 0; i < n; ++i) rowsum = std::max(rowsum, std::abs(e.row(i).sum()));
    out.push_back(Check::made(label + "_rowsum", 0.0, rowsum, rowsum, 1e-9 * a.trace()));

    out.push_back(Check::made(label + "_mean_drift", 0.0, emp.mean_drift,
                              std::abs(emp.mean_drift), 3.0 * emp.mean_drift_stderr));
  }
}

void conditional_one(const SteadyStateCovariance& sigma, const std::vector<int>& fail_idx,
                     int target, long samples, std::uint64_t seed, const std::string& name,
                     std::vector<Check>& out) {
  FailureObservation obs;
  obs.indices = fail_idx;
  obs.values = Eigen::VectorXd(static_cast<Eigen::Index>(fail_idx.size()));
  for (std::size_t a = 0; a < fail_idx.size(); ++a)
    obs.values(static_cast<Eigen::Index>(a)) = 0.4 * std::sqrt(sigma.variance(fail_idx[a]));

  const ConditionalLaw law = condition(sigma, obs, target);
  const ConditioningState state = init_state(sigma, obs);
  const Eigen::VectorXd u = state.half_solve(state.cross_column(sigma, target));
  const Eigen::VectorXd beta =
      state.factor().transpose().triangularView<Eigen::Upper>().solve(u);

  const double h = 0.75 * std::sqrt(sigma.variance(fail_idx.front()));
  const ConditionalCheckResult r = gaussian_conditional_check(sigma, obs, target, samples, h, seed);

  const double mean_identity = beta.dot(r.obs_mean);
  const double var_identity = law.sigma_tilde_sq + beta.dot(r.obs_cov * beta);

  out.push_back(Check::made(name + "_mean", law.mu_tilde, r.mu_hat,
                            std::abs(r.mu_hat - mean_identity), 3.0 * r.mu_stderr,
                            json{{"accepted", r.accepted}, {"identity", mean_identity}}));
  out.push_back(Check::made(name + "_var", law.sigma_tilde_sq, r.sigma_sq_hat,
                            std::abs(r.sigma_sq_hat - var_identity), 3.0 * r.var_stderr,
                            json{{"identity", var_identity}}));
}

void conditional_suite(const ValidateOptions& opt, std::vector<Check>& out) {
  const int n = opt.n < 0 ? 20 : opt.n;
  if (n < 10) throw InvalidSpec("validate conditional: n >= 10");
  // Unit noise keeps window scales O(1); the law only rescales with b^2.
  const double b = 1.0;
  const SteadyStateCovariance complete =
      steady_state_covariance(NetworkModel::make(GraphSpec::complete(n), opt.model.tau, b));
  const SteadyStateCovariance star =
      steady_state_covariance(NetworkModel::make(GraphSpec::star(n), opt.model.tau, b));

  int counter = 0;
  for (const int m : {1, 3, 7}) {
    std::vector<int> idx;
    for (int a = 1; a <= m; ++a) idx.push_back(a);  // avoids target 0 and star center n-1
    conditional_one(complete, idx, 0, opt.samples, mix_seed(opt.seed, 100 + counter),
                    "complete_m" + std::to_string(m), out);
    conditional_one(star, idx, 0, opt.samples, mix_seed(opt.seed, 200 + counter),
                    "star_m" + std::to_string(m), out);
    ++counter;
  }
  conditional_one(star, {1, 2, 3}, n - 1, opt.samples, mix_seed(opt.seed, 300),
                  "star_center_m3", out);
}

void tails_suite(const ValidateOptions& opt, std::vector<Check>& out) {
  // Synthetic unit-variance pair; c and alpha are pinned so the alarm set
  // actually bites (the library defaults make L* ~ 0.004 sigma, a vacuous
  // conditioning event).
  RiskParams params{1.5, 1.5, 0.1};
  const long samples = std::max<long>(opt.samples, 100000);

  for (const double z : {0.0, 0.75, 1.5}) {
    const double quad = conditional_exceedance(1.0, 1.0, 0.0, 1.0, z, params);
    const double closed = 1.0 - std::erf(z / std::sqrt(2.0));
    out.push_back(Check::made("tails_rho0_reduction_z" + io::format_double(z), closed, quad,
                              std::abs(quad - closed), 1e-9));
  }

  int counter = 0;
  for (const double rho : {-0.5, 0.0, 0.5}) {
    SteadyStateCovariance pair;
    pair.sigma = Eigen::MatrixXd(2, 2);
    pair.sigma << 1.0, rho, rho, 1.0;
    for (const double dstar : {0.0, 1.0, 4.0}) {
      for (const double z : {0.0, 0.75, 1.5}) {
        const double quad = conditional_exceedance(1.0, 1.0, rho, dstar, z, params);
        const TailCheckResult mc = tail_probability_check(pair, 0, 1, dstar, z, params, samples,
                                                          mix_seed(opt.seed, 400 + counter));
        char name[96];
        std::snprintf(name, sizeof(name), "tails_rho%+.1f_d%.0f_z%.2f", rho, dstar, z);
        out.push_back(Check::made(name, quad, mc.p_hat, std::abs(mc.p_hat - quad),
                                  3.0 * mc.stderr_value + 1e-9,
                                  json{{"accepted", mc.accepted}}));
        ++counter;
      }
    }
  }
}

void bounds_suite(const ValidateOptions& opt, std::vector<Check>& out) {
  const int n = opt.n < 0 ? 20 : opt.n;
  const RiskParams params = make_params(opt.risk);
  const SweepReport rep =
      bound_validation_sweep(static_cast<int>(opt.graphs), n, 0.2, 0.9, params, opt.model.tau,
                             opt.model.b, opt.risk.y_f, opt.seed, opt.threads);

  json histo{{"positive", rep.sign_positive},
             {"negative", rep.sign_negative},
             {"zero", rep.sign_zero}};
  json viols = json::array();
  for (const PairViolation& v : rep.first_violations)
    viols.push_back(json{{"graph", v.graph_index},
                         {"i", v.i + 1},
                         {"j", v.j + 1},
                         {"level_actual", v.level_actual},
                         {"level_bound", v.level_bound}});

  out.push_back(Check::made("bounds_violations", 0.0, static_cast<double>(rep.violations),
                            static_cast<double>(rep.violations), 0.0,
                            json{{"graphs", rep.graphs},
                                 {"pairs_checked", rep.pairs_checked},
                                 {"sign_histogram", histo},
                                 {"violations_sample", viols}}));
  out.push_back(Check::made("bounds_zero_covariance_pairs", 0.0,
                            static_cast<double>(rep.sign_zero),
                            static_cast<double>(rep.sign_zero), 0.0));
}

// Least-squares slope of log t against log m.
double loglog_slope(const std::vector<double>& m, const std::vector<double>& t) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double x = std::log(m[i]), y = std::log(t[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double denom = k * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) throw InvalidSpec("timing fit: degenerate m values");
  return (k * sxy - sx * sy) / denom;
}

}  // namespace

int cmd_analyze(const AnalyzeOptions& opt) {
  const GraphSpec spec = make_spec(opt.model);
  const Eigen::MatrixXd lap = build_laplacian(spec);
  const Spectrum spect = spectrum(lap);
  const StabilityReport stab = check_stability(spect, opt.model.tau);

  const json manifest = io::make_manifest("analyze", model_params_json(opt.model, spec));

  json stab_json = io::stability_to_json(stab, opt.model.tau);
  stab_json["lambda_max"] = spect.eigenvalues(spect.eigenvalues.size() - 1);
  stab_json["lambda_2"] = spect.eigenvalues(1);
  stab_json["effective_resistance"] = effective_resistance(spect);
  io::write_with_manifest(out_path(opt.out_dir, "stability.json"), stab_json.dump(2) + "\n",
                          manifest);
  io::write_with_manifest(out_path(opt.out_dir, "spectrum.json"),
                          io::spectrum_to_json(spect).dump(2) + "\n", manifest);

  if (!stab.stable) {
    std::cerr << "unstable: delay margin " << io::format_double(stab.margin) << " < 0\n";
    return 2;
  }

  const NetworkModel model = NetworkModel::make(spec, opt.model.tau, opt.model.b);
  const SteadyStateCovariance sigma = steady_state_covariance(model);
  io::write_with_manifest(out_path(opt.out_dir, "sigma.csv"), sigma_long_csv(sigma.sigma),
                          manifest);

  std::cout << "analyze: n=" << model.n() << " margin=" << io::format_double(stab.margin)
            << " sigma_11=" << io::format_double(sigma.variance(0)) << '\n';
  return 0;
}

int cmd_profile(const ProfileOptions& opt) {
  const GraphSpec spec = make_spec(opt.model);
  const NetworkModel model = NetworkModel::make(spec, opt.model.tau, opt.model.b);
  const SteadyStateCovariance sigma = steady_state_covariance(model);
  const RiskParams params = make_params(opt.risk);
  const FailureObservation obs = gather_failures(opt, model.n());

  const ConditioningState state = init_state(sigma, obs);
  std::vector<int> targets;
  for (int j = 0; j < model.n(); ++j)
    if (!state.observes(j)) targets.push_back(j);
  const LawCache laws = init_laws(state, sigma, targets);
  const RiskProfile profile = profile_from_laws(model.n(), state.indices(), laws, params);

  json params_json = model_params_json(opt.model, spec);
  params_json["risk"] = risk_params_json(opt.risk);
  params_json["failures"] = io::observation_to_json(obs);
  const json manifest = io::make_manifest("profile", params_json);

  write_profile_artifacts(opt.out_dir, profile, manifest);
  json state_json = io::state_to_json(state, model_params_json(opt.model, spec));
  state_json["laws"] = io::laws_to_json(laws);
  io::write_with_manifest(out_path(opt.out_dir, "state.json"), state_json.dump(2) + "\n",
                          manifest);

  std::cout << "profile: m=" << obs.m() << " of n=" << model.n() << " agents observed\n";
  return 0;
}

int cmd_update(const UpdateOptions& opt) {
  const std::string timing_path = out_path(opt.out_dir, "timing.csv");

  if (opt.report_fit) {
    std::ifstream in(timing_path);
    if (!in) throw InvalidSpec("update --report-fit: no timing log at " + timing_path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> ms, ups, rms, recs;
    while (std::getline(in, line)) {
      int n_row = 0, m_row = 0;
      double up = 0.0, rec = 0.0;
      if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &n_row, &m_row, &up, &rec) != 4) continue;
      if (m_row >= 1 && up > 0.0) { ms.push_back(m_row); ups.push_back(up); }
      if (m_row >= 1 && rec > 0.0) { rms.push_back(m_row); recs.push_back(rec); }
    }
    if (ms.size() < 3) throw InvalidSpec("update --report-fit: need at least 3 timed updates");
    json fit;
    fit["rows"] = ms.size();
    fit["fit_exponent_update"] = loglog_slope(ms, ups);
    if (recs.size() >= 3) fit["fit_exponent_recompute"] = loglog_slope(rms, recs);
    const json manifest = io::make_manifest("update", json{{"report_fit", true}});
    io::write_with_manifest(out_path(opt.out_dir, "timing_fit.json"), fit.dump(2) + "\n",
                            manifest);
    std::cout << "timing fit: update exponent " << fit["fit_exponent_update"].dump();
    if (fit.contains("fit_exponent_recompute"))
      std::cout << ", recompute exponent " << fit["fit_exponent_recompute"].dump();
    std::cout << '\n';
    return 0;
  }

  if (opt.state_file.empty()) throw InvalidSpec("update: --state <file> is required");
  if (opt.agent < 1) throw InvalidSpec("update: --agent (1-based) is required");

  json fingerprint;
  const json state_json = io::read_json_file(opt.state_file);
  ConditioningState state = io::state_from_json(state_json, &fingerprint);
  LawCache laws = io::laws_from_json(state_json.at("laws"));

  const GraphSpec spec = io::graph_spec_from_json(fingerprint.at("graph"));
  const double tau = fingerprint.at("tau").get<double>();
  const double b = fingerprint.at("b").get<double>();
  const NetworkModel model = NetworkModel::make(spec, tau, b);
  const SteadyStateCovariance sigma = steady_state_covariance(model);
  const RiskParams params = make_params(opt.risk);

  if (opt.agent > model.n()) throw InvalidSpec("update: --agent outside 1..n");
  const int k = opt.agent - 1;

  const auto t0 = std::chrono::steady_clock::now();
  update_one_failure(state, laws, k, opt.value, sigma);
  const auto t1 = std::chrono::steady_clock::now();
  const double update_seconds = std::chrono::duration<double>(t1 - t0).count();

  double recompute_seconds = 0.0;
  if (opt.time_recompute) {
    FailureObservation all;
    all.indices = state.indices();
    all.values = Eigen::VectorXd(state.m());
    // Recover y_f from the factor: y_f = L c.
    all.values = state.factor() * state.solved_values();
    std::vector<int> targets;
    for (int j = 0; j < model.n(); ++j)
      if (!state.observes(j)) targets.push_back(j);
    const auto r0 = std::chrono::steady_clock::now();
    const ConditioningState rebuilt = init_state(sigma, all);
    const LawCache relaws = init_laws(rebuilt, sigma, targets);
    const auto r1 = std::chrono::steady_clock::now();
    recompute_seconds = std::chrono::duration<double>(r1 - r0).count();
    (void)relaws;
  }

  const RiskProfile profile = profile_from_laws(model.n(), state.indices(), laws, params);

  json params_json = fingerprint;
  params_json["risk"] = risk_params_json(opt.risk);
  params_json["agent"] = opt.agent;
  params_json["value"] = opt.value;
  const json manifest = io::make_manifest("update", params_json);

  write_profile_artifacts(opt.out_dir, profile, manifest);
  json new_state = io::state_to_json(state, fingerprint);
  new_state["laws"] = io::laws_to_json(laws);
  io::write_file(opt.state_file, new_state.dump(2) + "\n");
  io::write_json(opt.state_file + ".manifest.json", manifest);

  if (!fs::exists(timing_path) || fs::file_size(timing_path) == 0)
    io::write_file(timing_path, "n,m_after,update_seconds,recompute_seconds\n");
  std::ofstream timing(timing_path, std::ios::app);
  timing << model.n() << ',' << state.m() << ',' << io::format_double(update_seconds) << ','
         << io::format_double(recompute_seconds) << '\n';

  std::cout << "update: agent " << opt.agent << " absorbed, m=" << state.m() << ", "
            << io::format_double(update_seconds) << " s";
  if (opt.time_recompute)
    std::cout << " (recompute " << io::format_double(recompute_seconds) << " s)";
  std::cout << '\n';
  return 0;
}

int cmd_bounds(const BoundsOptions& opt) {
  ModelOptions m = opt.model;
  if (m.n < 0) m.n = defaults::n;
  const GraphSpec spec = make_spec(m);
  const NetworkModel model = NetworkModel::make(spec, m.tau, m.b);
  const RiskParams params = make_params(opt.risk);

  BoundsDomain domain;
  if (opt.domain == "graph") domain = BoundsDomain::GraphSpecific;
  else if (opt.domain == "uniform") domain = BoundsDomain::UniformSbar;
  else throw InvalidSpec("--domain must be graph or uniform");

  const FExtrema ext = f_extrema();
  const CovarianceBounds cov = covariance_bounds(model, domain);

  json out;
  out["f"] = json{{"lower", ext.f_lower},
                  {"argmin", ext.argmin},
                  {"upper_sbar", ext.f_upper_on_sbar}};
  out["covariance"] = io::bounds_to_json(cov);
  out["best_achievable"] = json{
      {"positive", io::best_bound_to_json(best_achievable_bound(
                       model.n(), m.tau, m.b, opt.risk.y_f, params, CovSign::Positive))},
      {"negative", io::best_bound_to_json(best_achievable_bound(
                       model.n(), m.tau, m.b, opt.risk.y_f, params, CovSign::Negative))},
      {"zero", io::best_bound_to_json(best_achievable_bound(model.n(), m.tau, m.b, opt.risk.y_f,
                                                            params, CovSign::Zero))}};
  if (spec.topology == Topology::Complete)
    out["complete_certificate"] = io::best_bound_to_json(
        best_achievable_complete(model.n(), m.tau, m.b, opt.risk.y_f, params));

  json params_json = model_params_json(m, spec);
  params_json["risk"] = risk_params_json(opt.risk);
  params_json["domain"] = opt.domain;
  io::write_with_manifest(out_path(opt.out_dir, "bounds.json"), out.dump(2) + "\n",
                          io::make_manifest("bounds", params_json));

  std::cout << "bounds: f_lower=" << io::format_double(cov.f_lower)
            << " f_upper=" << io::format_double(cov.f_upper) << " (" << opt.domain << ")\n";
  return 0;
}

int cmd_validate(const ValidateOptions& opt) {
  std::vector<Check> checks;
  const bool all = opt.suite == "all";
  bool known = false;
  if (all || opt.suite == "covariance") { covariance_suite(opt, checks); known = true; }
  if (all || opt.suite == "conditional") { conditional_suite(opt, checks); known = true; }
  if (all || opt.suite == "tails") { tails_suite(opt, checks); known = true; }
  if (all || opt.suite == "bounds") { bounds_suite(opt, checks); known = true; }
  if (!known)
    throw InvalidSpec("--suite must be one of covariance, conditional, tails, bounds, all");

  bool pass = true;
  json rows = json::array();
  for (const Check& c : checks) {
    pass = pass && c.pass;
    rows.push_back(check_to_json(c));
  }

  json report;
  report["suite"] = opt.suite;
  report["seed"] = opt.seed;
  report["samples"] = opt.samples;
  report["graphs"] = opt.graphs;
  report["n"] = opt.n;
  report["params"] = risk_params_json(opt.risk);
  report["tau"] = opt.model.tau;
  report["b"] = opt.model.b;
  report["checks"] = std::move(rows);
  report["pass"] = pass;

  json params_json = report;
  params_json.erase("checks");
  params_json.erase("pass");
  io::write_with_manifest(out_path(opt.out_dir, "validate_report.json"), report.dump(2) + "\n",
                          io::make_manifest("validate", params_json));

  int failed = 0;
  for (const Check& c : checks)
    if (!c.pass) {
      ++failed;
      std::cerr << "FAIL " << c.name << ": metric " << io::format_double(c.metric)
                << " > tolerance " << io::format_double(c.tolerance) << '\n';
    }
  std::cout << "validate " << opt.suite << ": " << (checks.size() - failed) << "/"
            << checks.size() << " checks passed\n";
  return pass ? 0 : 5;
}

int cmd_sweep(const SweepOptions& opt) {
  const GraphSpec spec = make_spec(opt.model);
  const NetworkModel model = NetworkModel::make(spec, opt.model.tau, opt.model.b);
  const SteadyStateCovariance sigma = steady_state_covariance(model);
  const RiskParams params = make_params(opt.risk);
  const int n = model.n();
  const int target = opt.target < 0 ? n : opt.target;
  if (target < 1 || target > n) throw InvalidSpec("sweep: --target outside 1..n");

  std::string csv;
  if (opt.mode == "count") {
    const int max_m = opt.max_m < 0 ? n - 1 : opt.max_m;
    if (max_m < 1 || max_m > n - 1) throw InvalidSpec("sweep: --max-m outside 1..n-1");
    csv = "m,var,avar,level,branch\n";
    ConditioningState state;
    LawCache laws = init_laws(state, sigma, {target - 1});
    int absorbed = 0;
    for (int k = 1; k <= n && absorbed < max_m; ++k) {
      if (k == target) continue;
      update_one_failure(state, laws, k - 1, opt.risk.y_f, sigma);
      ++absorbed;
      const RiskAssessment a = assess(laws.front().law, params);
      csv += std::to_string(absorbed);
      csv += ',' + io::format_double(a.var) + ',' + io::format_double(a.avar) + ',' +
             level_text(a.level) + ',' + io::branch_name(a.level.branch) + '\n';
    }
  } else if (opt.mode == "location") {
    csv = "location,var,avar,level,branch\n";
    for (int k = 1; k <= n; ++k) {
      if (k == target) continue;
      FailureObservation obs;
      obs.indices = {k - 1};
      obs.values = Eigen::VectorXd::Constant(1, opt.risk.y_f);
      const RiskAssessment a = assess(condition(sigma, obs, target - 1), params);
      csv += std::to_string(k);
      csv += ',' + io::format_double(a.var) + ',' + io::format_double(a.avar) + ',' +
             level_text(a.level) + ',' + io::branch_name(a.level.branch) + '\n';
    }
  } else {
    throw InvalidSpec("sweep: --mode must be count or location");
  }

  json params_json = model_params_json(opt.model, spec);
  params_json["risk"] = risk_params_json(opt.risk);
  params_json["mode"] = opt.mode;
  params_json["target"] = target;
  if (opt.mode == "count") params_json["max_m"] = opt.max_m < 0 ? n - 1 : opt.max_m;
  io::write_with_manifest(out_path(opt.out_dir, "sweep.csv"), csv,
                          io::make_manifest("sweep", params_json));

  std::cout << "sweep " << opt.mode << ": target agent " << target << ", n=" << n << '\n';
  return 0;
}

}  // namespace cascade::cli
