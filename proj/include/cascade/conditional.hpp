#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cascade/covariance.hpp"

namespace cascade {

// Observed failures: agent indices (0-based, distinct) and their exact values.
// m = 0 means "condition on nothing".
struct FailureObservation {
  std::vector<int> indices;
  Eigen::VectorXd values;

  int m() const { return static_cast<int>(indices.size()); }
  void validate(int n) const;  // throws InvalidSpec on malformed input
};

// Conditional law of one unobserved agent: y_j | y_I = y_f ~ N(mu, s2).
struct ConditionalLaw {
  int target = -1;
  double mu_tilde = 0.0;
  double sigma_tilde_sq = 0.0;
};

// Growable Cholesky factor of the observed block Sigma_22 plus the solved
// vector c = L^{-1} y_f. Adding one failure appends one row to L in O(m^2)
// without touching the existing factor.
class ConditioningState {
 public:
  ConditioningState() = default;

  int m() const { return static_cast<int>(indices_.size()); }
  const std::vector<int>& indices() const { return indices_; }
  const Eigen::MatrixXd& factor() const { return l_; }
  const Eigen::VectorXd& solved_values() const { return c_; }

  bool observes(int agent) const;

  // u = L^{-1} r where r is Sigma's column restricted to the observed rows.
  Eigen::VectorXd half_solve(const Eigen::VectorXd& r) const;

  // Cross-covariance column Sigma(indices, j).
  Eigen::VectorXd cross_column(const SteadyStateCovariance& sigma, int j) const;

  // Appends failure (k, y_fk). Throws DegenerateUpdate when the conditional
  // variance of y_k given the current set is <= 1e-14 * sigma_kk.
  void append(int k, double y_fk, const SteadyStateCovariance& sigma);

  // Rebuilds a previously serialized state; shape checks only, the factor is
  // trusted as written.
  static ConditioningState restore(std::vector<int> indices, Eigen::MatrixXd factor,
                                   Eigen::VectorXd solved_values);

 private:
  friend ConditioningState init_state(const SteadyStateCovariance&, const FailureObservation&);
  std::vector<int> indices_;
  Eigen::MatrixXd l_;  // lower triangular, m x m
  Eigen::VectorXd c_;  // L^{-1} y_f
};

// Law of one target plus its half-solved cross column u_j = L^{-1} Sigma_21(j),
// the cache that makes the one-failure update O(1) per target.
struct TrackedLaw {
  ConditionalLaw law;
  Eigen::VectorXd u;
};

using LawCache = std::vector<TrackedLaw>;

// Direct route: one LLT of the observed block per call, no shared state.
ConditionalLaw condition(const SteadyStateCovariance& sigma, const FailureObservation& obs,
                         int j);

// Complete graph: mu = -1^T y_f/(n-m), s2 = sigma_j^2 (1 - m/((n-1)(n-m))).
ConditionalLaw condition_complete_closed_form(int n, int m, const Eigen::VectorXd& y_f,
                                              double sigma_j_sq);

enum class StarCase { PeripheryOnly, CenterIncluded };

// Star graph (center = node n-1, 0-based) conditioned on m failures.
// PeripheryOnly: failures avoid the center; CenterIncluded: center observed.
// y_f is ordered with the center value last when the center is included.
ConditionalLaw condition_star_closed_form(int n, int m, const Eigen::VectorXd& y_f,
                                          double tau, double b, StarCase star_case, int j);

// Build the incremental state by m successive appends.
ConditioningState init_state(const SteadyStateCovariance& sigma,
                             const FailureObservation& obs);

// Laws + caches for a set of targets against an existing state.
LawCache init_laws(const ConditioningState& state, const SteadyStateCovariance& sigma,
                   const std::vector<int>& targets);

// One new failure (k, y_fk): every tracked law is updated by the scalar
// single-step rule, then the state absorbs k. Targets equal to k drop out.
void update_one_failure(ConditioningState& state, LawCache& laws, int k, double y_fk,
                        const SteadyStateCovariance& sigma);

}  // namespace cascade
