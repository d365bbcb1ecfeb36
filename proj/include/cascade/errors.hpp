#pragma once

#include <stdexcept>
#include <string>

namespace cascade {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user-supplied structure: n < 2, p out of range, malformed weights, bad params.
struct InvalidSpec : Error {
  using Error::Error;
};

// Graph failed the spectral connectivity test (lambda_2 ~ 0).
struct DisconnectedGraph : Error {
  using Error::Error;
};

// Eigensolver did not converge.
struct EigSolverFailure : Error {
  using Error::Error;
};

// Sampling retry cap hit without satisfying connectivity + delay margin.
struct RetryExhausted : Error {
  using Error::Error;
};

// Assumption tau < pi/(2 lambda_n) violated, or some 1 - sin(lambda_k tau) < 1e-9.
struct StabilityViolation : Error {
  using Error::Error;
};

// Argument outside the open interval a scalar map is defined on.
struct DomainError : Error {
  using Error::Error;
};

// Uniform-domain bounds requested but some lambda_k tau falls outside the domain.
struct DomainViolation : Error {
  using Error::Error;
};

// Observed block of the covariance is numerically singular.
struct SingularBlock : Error {
  using Error::Error;
};

// Conditioning target is itself observed.
struct TargetObserved : Error {
  using Error::Error;
};

// m >= n style count violations in closed forms.
struct InvalidCount : Error {
  using Error::Error;
};

// Star closed form called with a case that contradicts the index set.
struct InvalidCase : Error {
  using Error::Error;
};

// New observation nearly determined by the existing ones; update rejected.
struct DegenerateUpdate : Error {
  using Error::Error;
};

// |rho_ij| too close to 1 for the bivariate tail integrals.
struct DegenerateCorrelation : Error {
  using Error::Error;
};

// Sign case with no defined best-achievable bound.
struct InvalidSign : Error {
  using Error::Error;
};

// Adaptive integrator ran out of panel budget before hitting tolerance.
struct QuadratureFailure : Error {
  using Error::Error;
};

// Trajectory state exceeded the blowup guard.
struct NumericalBlowup : Error {
  using Error::Error;
};

// Windowed sampler kept fewer samples than the statistical floor.
struct InsufficientSamples : Error {
  using Error::Error;
};

// Rejection sampler accepted nothing.
struct EmptyConditioningSet : Error {
  using Error::Error;
};

}  // namespace cascade
