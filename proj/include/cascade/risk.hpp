#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cascade/conditional.hpp"
#include "cascade/covariance.hpp"

namespace cascade {

struct RiskParams {
  double c = 4.0;       // consensus tolerance, > 0
  double alpha = 1000;  // level-set shape, > 1
  double epsilon = 0.1; // confidence level, in (0,1)

  void validate() const;
};

enum class RiskBranch { Zero, Finite, Infinite };

// Extended-real risk level as an explicit tagged value. value is 0 for Zero,
// +inf for Infinite, the finite level otherwise.
struct RiskLevel {
  RiskBranch branch = RiskBranch::Zero;
  double value = 0.0;
};

struct RiskAssessment {
  double var = 0.0;   // folded-normal quantile threshold
  double avar = 0.0;  // mean beyond that threshold, >= var
  RiskLevel level;
};

struct RiskProfile {
  std::vector<int> observed;              // failed agents, ascending
  std::vector<RiskAssessment> per_agent;  // size n; observed entries zeroed
};

enum class CovSign { Positive, Negative, Zero };

struct BestAchievableBound {
  CovSign cov_sign = CovSign::Positive;
  double frak_A = 0.0;      // lower bound on the achievable AVaR
  RiskLevel level_bound;    // same three-branch map applied to frak_A
  double kappa_eps = 0.0;   // the kappa actually used by the case
  double iota_eps = 0.0;    // erf_inv(2 eps - 1) for the requested epsilon
  double sigma_min = 0.0;
  double mu_tilde = 0.0;    // complete-graph certificate only, else 0
};

struct PairViolation {
  int graph_index = 0;
  int i = 0, j = 0;
  double level_actual = 0.0, level_bound = 0.0;
};

struct SweepReport {
  long graphs = 0;
  long pairs_checked = 0;
  long violations = 0;
  long sign_positive = 0;
  long sign_negative = 0;
  long sign_zero = 0;
  std::vector<PairViolation> first_violations;  // capped sample for debugging
};

// Smallest gamma >= 0 with P(|Y| > gamma) <= epsilon for Y ~ N(mu, sigma^2):
// the root of erf((g-mu)/(sqrt2 s)) + erf((g+mu)/(sqrt2 s)) = 2(1-eps).
// sigma_tilde = 0 collapses the law to a point mass and returns |mu|.
double folded_var(double mu_tilde, double sigma_tilde, double epsilon);

// Conditional mean of |Y| beyond folded_var, in closed form.
double folded_avar(double mu_tilde, double sigma_tilde, double epsilon);
double folded_avar_at(double mu_tilde, double sigma_tilde, double epsilon, double gamma);

// Three-branch map from an AVaR value to the level index.
RiskLevel risk_level(double frak_A, const RiskParams& params);

// Condition + folded VaR/AVaR + level for one law.
RiskAssessment assess(const ConditionalLaw& law, const RiskParams& params);

// Whole-network profile given exact observed failures.
RiskProfile cascading_risk_profile(const SteadyStateCovariance& sigma,
                                   const FailureObservation& obs, const RiskParams& params);

// P(|y_j| > z | |y_i| in U_delta) for the range-bounded observation
// |y_i| > c(delta*+1)/(delta*+alpha), via adaptive quadrature.
double conditional_exceedance(double sigma_i, double sigma_j, double rho,
                              double delta_star, double z, const RiskParams& params);

// VaR/AVaR/level of agent j given only that agent i is inside the alarm set.
RiskAssessment range_bounded_risk(const SteadyStateCovariance& sigma, int i,
                                  double delta_star, int j, const RiskParams& params);

// kappa_eps = 1/(sqrt(2 pi) eps exp(iota^2)), iota = erf_inv(2 eps - 1).
double kappa_eps(double epsilon);

// Topology-independent lower bounds under the uniform scaled-delay domain.
BestAchievableBound best_achievable_bound(int n, double tau, double b, double y_f,
                                          const RiskParams& params, CovSign cov_sign,
                                          double sbar_lo = kSbarLo, double sbar_hi = kSbarHi);

// Sharper certificate for the unweighted complete graph.
BestAchievableBound best_achievable_complete(int n, double tau, double b, double y_f,
                                             const RiskParams& params);

// Random-graph search for bound violations over all ordered pairs (i, j):
// observe y_f at i, compare the exact pipeline level for j against the
// case-matched bound. edge_prob drawn uniformly from [edge_prob_lo, edge_prob_hi].
SweepReport bound_validation_sweep(int num_graphs, int n, double edge_prob_lo,
                                   double edge_prob_hi, const RiskParams& params,
                                   double tau, double b, double y_f, std::uint64_t seed,
                                   int threads = 1);

}  // namespace cascade
