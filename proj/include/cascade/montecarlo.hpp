#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "cascade/conditional.hpp"
#include "cascade/covariance.hpp"
#include "cascade/risk.hpp"

namespace cascade {

enum class InitialKind { Zeros, Constant, Supplied };

// Constant initial history on [-tau, 0]; steady-state statistics do not
// depend on it, burn-in removes the transient.
struct InitialCondition {
  InitialKind kind = InitialKind::Zeros;
  double value = 0.0;
  Eigen::VectorXd vec;

  static InitialCondition zeros() { return {}; }
  static InitialCondition constant(double v) { return {InitialKind::Constant, v, {}}; }
  static InitialCondition supplied(Eigen::VectorXd v) {
    return {InitialKind::Supplied, 0.0, std::move(v)};
  }
};

struct SimConfig {
  double dt = 1e-3;
  double horizon = 0.0;
  double burn_in = 0.0;
  int trajectories = 1;
  std::uint64_t seed = 0;
  InitialCondition initial;
  double stride = -1.0;  // seconds between retained samples; < 0 means 5 tau
  int threads = 1;
};

struct EmpiricalCovariance {
  Eigen::MatrixXd sigma_hat;
  long samples = 0;
  double stderr_scale = 0.0;  // 1/sqrt(samples)
  double mean_drift = 0.0;        // avg over trajectories of network-average drift
  double mean_drift_stderr = 0.0;
};

// Euler-Maruyama for dx = -L x(t - tau) dt + b dw with a ring buffer of
// K + 1 = tau/dt + 1 past states; pools the centered second moment over
// trajectories and strided post-burn-in samples.
EmpiricalCovariance simulate_trajectories(const NetworkModel& model, const SimConfig& cfg);

struct ConditionalCheckResult {
  double mu_hat = 0.0;
  double sigma_sq_hat = 0.0;
  double mu_stderr = 0.0;
  double var_stderr = 0.0;  // on sigma_sq_hat, via the empirical fourth moment
  long accepted = 0;
  Eigen::VectorXd obs_mean;  // mean of the observed coordinates over accepted draws
  Eigen::MatrixXd obs_cov;   // their covariance; both drive exact-identity checks
};

// Draws y ~ N(0, Sigma) and keeps draws with |y_i - y_f_i| <= window_h on all
// observed coordinates; reports windowed moments of the target coordinate.
ConditionalCheckResult gaussian_conditional_check(const SteadyStateCovariance& sigma,
                                                  const FailureObservation& obs, int j,
                                                  long samples, double window_h,
                                                  std::uint64_t seed);

struct TailCheckResult {
  double p_hat = 0.0;
  double stderr_value = 0.0;  // binomial
  long accepted = 0;
};

// Rejection estimate of P(|y_j| > z | |y_i| > c(delta*+1)/(delta*+alpha))
// from the exact bivariate marginal of (y_i, y_j).
TailCheckResult tail_probability_check(const SteadyStateCovariance& sigma, int i, int j,
                                       double delta_star, double z,
                                       const RiskParams& params, long samples,
                                       std::uint64_t seed);

}  // namespace cascade
