#pragma once

#include <Eigen/Dense>

#include "cascade/graph.hpp"

namespace cascade {

// Graph + delay + noise level with the spectrum cached. Construction enforces
// connectivity and the delay margin tau < pi/(2 lambda_n).
struct NetworkModel {
  GraphSpec spec;
  Eigen::MatrixXd laplacian;
  Spectrum spec_decomp;
  double tau = 0.0;
  double b = 0.0;

  static NetworkModel make(const GraphSpec& spec, double tau, double b);
  // Skips the delay-margin check; used to drive the integrator into the
  // unstable regime on purpose. Connectivity is still required.
  static NetworkModel make_unchecked(const GraphSpec& spec, double tau, double b);

  int n() const { return spec.n; }
};

struct SteadyStateCovariance {
  Eigen::MatrixXd sigma;

  int n() const { return static_cast<int>(sigma.rows()); }
  double variance(int i) const { return sigma(i, i); }
  double correlation(int i, int j) const;
};

enum class BoundsDomain { GraphSpecific, UniformSbar };

struct CovarianceBounds {
  double diag_lo = 0.0, diag_hi = 0.0;
  double offdiag_lo = 0.0, offdiag_hi = 0.0;
  double f_lower = 0.0, f_upper = 0.0;
  BoundsDomain domain = BoundsDomain::GraphSpecific;
  double domain_lo = 0.0, domain_hi = 0.0;  // interval the bound quantifies over
};

struct FExtrema {
  double f_lower = 0.0;
  double argmin = 0.0;
  double f_upper_on_sbar = 0.0;
};

// Uniform scaled-delay domain for the topology-independent bounds. The right
// margin is tighter than the left: f blows up like 2/(pi/2 - x) there, and the
// envelope value is pinned by the 1e-4 margin.
inline constexpr double kSbarLo = 1e-3;
inline constexpr double kSbarHi = 1.5707963267948966 - 1e-4;  // pi/2 - 1e-4

// g(x) = cos(x)/(1 - sin(x)), the delay gain of one spectral mode.
double g_function(double x);

// f(x) = cos(x)/(2x(1 - sin(x))) on (0, pi/2).
double f_function(double x);

// Global minimum of f on (0, pi/2) and its sup over [sbar_lo, sbar_hi].
FExtrema f_extrema(double sbar_lo = kSbarLo, double sbar_hi = kSbarHi);

// Exact steady-state covariance of the centered observables:
// Sigma = (b^2/2) sum_{k>=2} w_k q_k q_k^T with
// w_k = cos(lambda_k tau) / (lambda_k (1 - sin(lambda_k tau))).
// The q_k already live in the centered subspace, so M Sigma M = Sigma.
SteadyStateCovariance steady_state_covariance(const NetworkModel& model);

// Closed forms for the two special topologies; star center is node n.
SteadyStateCovariance covariance_complete(int n, double tau, double b);
SteadyStateCovariance covariance_star(int n, double tau, double b);

// Entrywise envelopes for sigma_ii and sigma_ij from the delay-gain extrema.
CovarianceBounds covariance_bounds(const NetworkModel& model,
                                   BoundsDomain domain = BoundsDomain::GraphSpecific,
                                   double sbar_lo = kSbarLo, double sbar_hi = kSbarHi);

}  // namespace cascade
