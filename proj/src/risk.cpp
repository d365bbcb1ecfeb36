#include "cascade/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "cascade/errors.hpp"
#include "cascade/numerics.hpp"

namespace cascade {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;
constexpr double kInf = std::numeric_limits<double>::infinity();

double erf_sum(double gamma, double mu, double sigma) {
  const double inv = 1.0 / (kSqrt2 * sigma);
  return std::erf((gamma - mu) * inv) + std::erf((gamma + mu) * inv);
}

}  // namespace

void RiskParams::validate() const {
  if (!(c > 0.0)) throw InvalidSpec("RiskParams: c must be positive");
  if (!(alpha > 1.0)) throw InvalidSpec("RiskParams: alpha must exceed 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidSpec("RiskParams: epsilon in (0,1)");
}

double folded_var(double mu_tilde, double sigma_tilde, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidSpec("folded_var: epsilon in (0,1)");
  if (sigma_tilde < 0.0) throw InvalidSpec("folded_var: sigma_tilde must be nonnegative");
  if (sigma_tilde == 0.0) return std::abs(mu_tilde);  // point mass at |mu|
  const double target = 2.0 * (1.0 - epsilon);
  // erf_sum is 0 at gamma=0 and increases to 2, so the bracket below always
  // closes; growth doubles the width for extreme epsilon.
  double hi = std::abs(mu_tilde) + 10.0 * sigma_tilde;
  while (erf_sum(hi, mu_tilde, sigma_tilde) < target) hi *= 2.0;
  return brent_root(
      [&](double g) { return erf_sum(g, mu_tilde, sigma_tilde) - target; }, 0.0, hi,
      1e-15 * (std::abs(mu_tilde) + sigma_tilde));
}

double folded_avar_at(double mu_tilde, double sigma_tilde, double epsilon, double gamma) {
  if (sigma_tilde == 0.0) return std::abs(mu_tilde);
  const double s = sigma_tilde;
  const double up = (gamma + mu_tilde) / (kSqrt2 * s);
  const double dn = (gamma - mu_tilde) / (kSqrt2 * s);
  return s / (kSqrt2Pi * epsilon) * (std::exp(-up * up) + std::exp(-dn * dn)) +
         mu_tilde / (2.0 * epsilon) * (std::erf(up) - std::erf(dn));
}

double folded_avar(double mu_tilde, double sigma_tilde, double epsilon) {
  const double gamma = folded_var(mu_tilde, sigma_tilde, epsilon);
  return folded_avar_at(mu_tilde, sigma_tilde, epsilon, gamma);
}

RiskLevel risk_level(double frak_A, const RiskParams& params) {
  params.validate();
  if (!(frak_A >= 0.0)) throw DomainError("risk_level: frak_A must be nonnegative");
  RiskLevel lvl;
  if (frak_A <= params.c / params.alpha) {
    lvl.branch = RiskBranch::Zero;
    lvl.value = 0.0;
  } else if (frak_A >= params.c) {
    lvl.branch = RiskBranch::Infinite;
    lvl.value = kInf;
  } else {
    lvl.branch = RiskBranch::Finite;
    lvl.value = (params.alpha * frak_A - params.c) / (params.c - frak_A);
  }
  return lvl;
}

RiskAssessment assess(const ConditionalLaw& law, const RiskParams& params) {
  params.validate();
  RiskAssessment r;
  r.var = folded_var(law.mu_tilde, std::sqrt(law.sigma_tilde_sq), params.epsilon);
  r.avar = folded_avar_at(law.mu_tilde, std::sqrt(law.sigma_tilde_sq), params.epsilon, r.var);
  r.level = risk_level(r.avar, params);
  return r;
}

RiskProfile cascading_risk_profile(const SteadyStateCovariance& sigma,
                                   const FailureObservation& obs,
                                   const RiskParams& params) {
  params.validate();
  const int n = sigma.n();
  obs.validate(n);

  std::vector<int> targets;
  targets.reserve(n - obs.m());
  for (int j = 0; j < n; ++j) {
    bool is_observed = false;
    for (int idx : obs.indices) is_observed |= (idx == j);
    if (!is_observed) targets.push_back(j);
  }

  const ConditioningState state = init_state(sigma, obs);
  const LawCache laws = init_laws(state, sigma, targets);

  RiskProfile profile;
  profile.observed = obs.indices;
  std::sort(profile.observed.begin(), profile.observed.end());
  profile.per_agent.assign(n, RiskAssessment{});  // observed entries stay zero
  for (const TrackedLaw& t : laws) profile.per_agent[t.law.target] = assess(t.law, params);
  return profile;
}

double conditional_exceedance(double sigma_i, double sigma_j, double rho,
                              double delta_star, double z, const RiskParams& params) {
  params.validate();
  if (!(sigma_i > 0.0 && sigma_j > 0.0))
    throw InvalidSpec("conditional_exceedance: marginals must be nondegenerate");
  if (!(delta_star >= 0.0)) throw InvalidSpec("conditional_exceedance: delta_star >= 0");
  if (!(z >= 0.0)) throw InvalidSpec("conditional_exceedance: z >= 0");
  if (std::abs(rho) >= 1.0 - 1e-12)
    throw DegenerateCorrelation("conditional_exceedance: |rho| too close to 1");

  const double alarm = params.c * (delta_star + 1.0) / (delta_star + params.alpha);
  const double p_alarm = 1.0 - std::erf(alarm / (kSqrt2 * sigma_i));
  const double s_perp = std::sqrt(2.0 * (1.0 - rho * rho));

  // weight(x) = P(|y_i| > alarm | y_j = x); even part folded into [z, inf).
  const auto weight = [&](double x) {
    const double shift = rho * x / sigma_j;
    return 1.0 - 0.5 * std::erf((alarm / sigma_i - shift) / s_perp) +
           0.5 * std::erf((-alarm / sigma_i - shift) / s_perp);
  };
  const auto integrand = [&](double x) {
    const double u = x / sigma_j;
    return std::exp(-0.5 * u * u) / (kSqrt2Pi * sigma_j) * (weight(x) + weight(-x));
  };
  // Outer tail beyond 12 sigma carries < 1e-30 of the mass.
  const double tail_hi = z + 12.0 * sigma_j;
  const double joint = integrate_adaptive(integrand, z, tail_hi, 1e-12);
  return std::clamp(joint / p_alarm, 0.0, 1.0);
}

RiskAssessment range_bounded_risk(const SteadyStateCovariance& sigma, int i,
                                  double delta_star, int j, const RiskParams& params) {
  params.validate();
  const int n = sigma.n();
  if (i < 0 || i >= n || j < 0 || j >= n || i == j)
    throw InvalidSpec("range_bounded_risk: bad agent pair");
  const double sigma_i = std::sqrt(sigma.sigma(i, i));
  const double sigma_j = std::sqrt(sigma.sigma(j, j));
  const double rho = sigma.correlation(i, j);
  if (std::abs(rho) >= 1.0 - 1e-12)
    throw DegenerateCorrelation("range_bounded_risk: |rho_ij| too close to 1");

  const auto tail = [&](double z) {
    return conditional_exceedance(sigma_i, sigma_j, rho, delta_star, z, params);
  };

  // tail(0) = 1 and tail decreases to 0; expand until it crosses epsilon.
  double hi = sigma_j;
  while (tail(hi) > params.epsilon) hi *= 2.0;
  const double gamma =
      brent_root([&](double z) { return tail(z) - params.epsilon; }, 0.0, hi,
                 1e-13 * sigma_j);

  const double alarm = params.c * (delta_star + 1.0) / (delta_star + params.alpha);
  const double p_alarm = 1.0 - std::erf(alarm / (kSqrt2 * sigma_i));
  const double s_perp = std::sqrt(2.0 * (1.0 - rho * rho));
  const auto weight = [&](double x) {
    const double shift = rho * x / sigma_j;
    return 1.0 - 0.5 * std::erf((alarm / sigma_i - shift) / s_perp) +
           0.5 * std::erf((-alarm / sigma_i - shift) / s_perp);
  };
  const auto mean_integrand = [&](double x) {
    const double u = x / sigma_j;
    return x * std::exp(-0.5 * u * u) / (kSqrt2Pi * sigma_j) * (weight(x) + weight(-x));
  };
  const double numer =
      integrate_adaptive(mean_integrand, gamma, gamma + 12.0 * sigma_j, 1e-11 * sigma_j);

  RiskAssessment r;
  r.var = gamma;
  r.avar = std::max(numer / (params.epsilon * p_alarm), gamma);
  r.level = risk_level(r.avar, params);
  return r;
}

double kappa_eps(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidSpec("kappa_eps: epsilon in (0,1)");
  const double iota = erf_inv(2.0 * epsilon - 1.0);
  return 1.0 / (kSqrt2Pi * epsilon * std::exp(iota * iota));
}

BestAchievableBound best_achievable_bound(int n, double tau, double b, double y_f,
                                          const RiskParams& params, CovSign cov_sign,
                                          double sbar_lo, double sbar_hi) {
  params.validate();
  if (n < 2) throw InvalidSpec("best_achievable_bound: n must be at least 2");
  if (!(y_f > 0.0)) throw InvalidSpec("best_achievable_bound: y_f must be positive");
  if (tau < 0.0 || b < 0.0) throw InvalidSpec("best_achievable_bound: tau, b nonnegative");

  const FExtrema ext = f_extrema(sbar_lo, sbar_hi);
  const double nn = static_cast<double>(n);
  BestAchievableBound out;
  out.cov_sign = cov_sign;
  out.iota_eps = erf_inv(2.0 * params.epsilon - 1.0);
  out.sigma_min = std::sqrt((nn - 1.0) / nn * b * b * tau * ext.f_lower);

  switch (cov_sign) {
    case CovSign::Positive:
      out.kappa_eps = kappa_eps(params.epsilon);
      out.frak_A = std::min(out.kappa_eps * out.sigma_min,
                            std::sqrt(ext.f_lower / ext.f_upper_on_sbar) * y_f);
      break;
    case CovSign::Negative:
      out.kappa_eps = kappa_eps(params.epsilon);
      out.frak_A = 0.0;
      break;
    case CovSign::Zero:
      out.kappa_eps = kappa_eps(0.5 * params.epsilon);
      out.frak_A = out.kappa_eps * out.sigma_min;
      break;
  }
  out.level_bound = risk_level(out.frak_A, params);
  return out;
}

BestAchievableBound best_achievable_complete(int n, double tau, double b, double y_f,
                                             const RiskParams& params) {
  params.validate();
  if (n < 3) throw InvalidSpec("best_achievable_complete: n must be at least 3");
  if (!(y_f > 0.0)) throw InvalidSpec("best_achievable_complete: y_f must be positive");
  const FExtrema ext = f_extrema();
  const double nn = static_cast<double>(n);
  BestAchievableBound out;
  // Complete-graph off-diagonals are negative; this certificate sharpens the
  // generic zero bound of that case using the exact conditional mean.
  out.cov_sign = CovSign::Negative;
  out.kappa_eps = kappa_eps(params.epsilon);
  out.iota_eps = erf_inv(2.0 * params.epsilon - 1.0);
  out.mu_tilde = -y_f / (nn - 1.0);
  out.sigma_min = std::sqrt((nn - 2.0) / (nn - 1.0) * b * b * tau * ext.f_lower);
  out.frak_A = folded_avar(out.mu_tilde, out.sigma_min, params.epsilon);
  out.level_bound = risk_level(out.frak_A, params);
  return out;
}

namespace {

struct SweepShard {
  long pairs = 0;
  long violations = 0;
  long pos = 0, neg = 0, zero = 0;
  std::vector<PairViolation> sample;
};

// Extended-real comparison: true when the actual level sits below the bound.
bool level_below(const RiskLevel& actual, const RiskLevel& bound) {
  if (bound.branch == RiskBranch::Zero) return false;
  if (actual.branch == RiskBranch::Infinite) return false;
  if (bound.branch == RiskBranch::Infinite) return true;
  return actual.value < bound.value;
}

}  // namespace

SweepReport bound_validation_sweep(int num_graphs, int n, double edge_prob_lo,
                                   double edge_prob_hi, const RiskParams& params,
                                   double tau, double b, double y_f, std::uint64_t seed,
                                   int threads) {
  params.validate();
  if (num_graphs < 1) throw InvalidSpec("bound_validation_sweep: num_graphs >= 1");
  if (!(edge_prob_lo > 0.0 && edge_prob_lo <= edge_prob_hi && edge_prob_hi < 1.0))
    throw InvalidSpec("bound_validation_sweep: bad edge_prob range");
  threads = std::max(1, threads);

  // The three case bounds are graph-independent; hoist them.
  const BestAchievableBound bound_pos =
      best_achievable_bound(n, tau, b, y_f, params, CovSign::Positive);
  const BestAchievableBound bound_neg =
      best_achievable_bound(n, tau, b, y_f, params, CovSign::Negative);
  const BestAchievableBound bound_zero =
      best_achievable_bound(n, tau, b, y_f, params, CovSign::Zero);

  const auto run_shard = [&](int lo, int hi, SweepShard& shard) {
    for (int gidx = lo; gidx < hi; ++gidx) {
      std::uint64_t pstate = mix_seed(seed, 0xC0FFEEull + static_cast<std::uint64_t>(gidx));
      const double u = static_cast<double>(splitmix64(pstate) >> 11) * 0x1.0p-53;
      const double edge_prob = edge_prob_lo + (edge_prob_hi - edge_prob_lo) * u;
      const GraphSpec spec = random_connected_graph(
          n, edge_prob, mix_seed(seed, static_cast<std::uint64_t>(gidx)), tau);
      const NetworkModel model = NetworkModel::make(spec, tau, b);
      const SteadyStateCovariance sigma = steady_state_covariance(model);

      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          const double sig_i = std::sqrt(sigma.sigma(i, i));
          const double sig_j = std::sqrt(sigma.sigma(j, j));
          const double off = sigma.sigma(i, j);
          const BestAchievableBound* bound = nullptr;
          if (std::abs(off) < 1e-15 * sig_i * sig_j) {
            ++shard.zero;
            bound = &bound_zero;
          } else if (off > 0.0) {
            ++shard.pos;
            bound = &bound_pos;
          } else {
            ++shard.neg;
            bound = &bound_neg;
          }

          FailureObservation obs;
          obs.indices = {i};
          obs.values = Eigen::VectorXd::Constant(1, y_f);
          const RiskAssessment actual = assess(condition(sigma, obs, j), params);
          ++shard.pairs;
          if (level_below(actual.level, bound->level_bound)) {
            ++shard.violations;
            if (shard.sample.size() < 10)
              shard.sample.push_back(PairViolation{gidx, i, j, actual.level.value,
                                                   bound->level_bound.value});
          }
        }
      }
    }
  };

  std::vector<SweepShard> shards(threads);
  if (threads == 1) {
    run_shard(0, num_graphs, shards[0]);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const int chunk = (num_graphs + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int lo = t * chunk, hi = std::min(num_graphs, (t + 1) * chunk);
      pool.emplace_back([&, t, lo, hi] {
        try {
          if (lo < hi) run_shard(lo, hi, shards[t]);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  SweepReport report;
  report.graphs = num_graphs;
  for (const SweepShard& s : shards) {
    report.pairs_checked += s.pairs;
    report.violations += s.violations;
    report.sign_positive += s.pos;
    report.sign_negative += s.neg;
    report.sign_zero += s.zero;
    for (const PairViolation& v : s.sample)
      if (report.first_violations.size() < 10) report.first_violations.push_back(v);
  }
  return report;
}

}  // namespace cascade
