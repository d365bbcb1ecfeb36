#include "cascade/covariance.hpp"

#include <algorithm>
#include <cmath>

#include "cascade/errors.hpp"
#include "cascade/numerics.hpp"

namespace cascade {

namespace {

constexpr double kHalfPi = 1.5707963267948966;
constexpr double kDenomFloor = 1e-9;  // on 1 - sin(lambda_k tau)

NetworkModel make_model(const GraphSpec& spec, double tau, double b, bool enforce_margin) {
  if (tau < 0.0) throw InvalidSpec("NetworkModel: tau must be nonnegative");
  if (b < 0.0) throw InvalidSpec("NetworkModel: b must be nonnegative");
  NetworkModel m;
  m.spec = spec;
  m.laplacian = build_laplacian(spec);
  m.spec_decomp = spectrum(m.laplacian);
  m.tau = tau;
  m.b = b;
  if (!spectrally_connected(m.spec_decomp.eigenvalues))
    throw DisconnectedGraph("NetworkModel: graph is disconnected");
  if (enforce_margin && !check_stability(m.spec_decomp, tau).stable)
    throw StabilityViolation("NetworkModel: tau >= pi/(2 lambda_n)");
  return m;
}

}  // namespace

NetworkModel NetworkModel::make(const GraphSpec& spec, double tau, double b) {
  return make_model(spec, tau, b, true);
}

NetworkModel NetworkModel::make_unchecked(const GraphSpec& spec, double tau, double b) {
  return make_model(spec, tau, b, false);
}

double SteadyStateCovariance::correlation(int i, int j) const {
  return sigma(i, j) / std::sqrt(sigma(i, i) * sigma(j, j));
}

double g_function(double x) {
  const double denom = 1.0 - std::sin(x);
  if (denom < kDenomFloor)
    throw StabilityViolation("g_function: 1 - sin(x) below floor");
  return std::cos(x) / denom;
}

double f_function(double x) {
  if (!(x > 0.0 && x < kHalfPi))
    throw DomainError("f_function: x must lie in (0, pi/2)");
  const double denom = 1.0 - std::sin(x);
  if (denom < 1e-300) throw DomainError("f_function: denominator underflow");
  return std::cos(x) / (2.0 * x * denom);
}

FExtrema f_extrema(double sbar_lo, double sbar_hi) {
  if (!(sbar_lo > 0.0 && sbar_lo < sbar_hi && sbar_hi < kHalfPi))
    throw DomainError("f_extrema: need 0 < sbar_lo < sbar_hi < pi/2");
  FExtrema e;
  // f decays from +inf, dips once, rises to +inf; one interior minimum.
  e.argmin = brent_minimize([](double x) { return f_function(x); }, 1e-6, kHalfPi - 1e-6,
                            1e-12);
  e.f_lower = f_function(e.argmin);
  // Sup over the closed truncated domain sits at an endpoint: f is unimodal
  // with its only critical point at the minimum. Interior grid guard anyway.
  double hi = std::max(f_function(sbar_lo), f_function(sbar_hi));
  for (int i = 1; i < 64; ++i) {
    const double x = sbar_lo + (sbar_hi - sbar_lo) * i / 64.0;
    hi = std::max(hi, f_function(x));
  }
  e.f_upper_on_sbar = hi;
  return e;
}

SteadyStateCovariance steady_state_covariance(const NetworkModel& model) {
  const int n = model.n();
  const Eigen::VectorXd& lam = model.spec_decomp.eigenvalues;
  const Eigen::MatrixXd& q = model.spec_decomp.eigenvectors;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double x = lam(k) * model.tau;
    const double denom = 1.0 - std::sin(x);
    if (std::cos(x) <= 0.0 || denom < kDenomFloor)
      throw StabilityViolation("steady_state_covariance: mode at lambda_k tau >= pi/2");
    const double w = std::cos(x) / (lam(k) * denom);
    acc.noalias() += w * q.col(k) * q.col(k).transpose();
  }
  SteadyStateCovariance out;
  out.sigma = (0.5 * model.b * model.b) * acc;
  // The eigenvectors k>=2 are orthogonal to 1_n, so the result is already
  // centered; symmetrize away the accumulation roundoff.
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
  return out;
}

SteadyStateCovariance covariance_complete(int n, double tau, double b) {
  if (n < 2) throw InvalidSpec("covariance_complete: n must be at least 2");
  const double x = static_cast<double>(n) * tau;
  if (!(x < kHalfPi)) throw StabilityViolation("covariance_complete: n tau >= pi/2");
  const double g = g_function(x);
  const double nn = static_cast<double>(n);
  const double diag = (nn - 1.0) / (2.0 * nn * nn) * b * b * g;
  const double off = -1.0 / (2.0 * nn * nn) * b * b * g;
  SteadyStateCovariance out;
  out.sigma = Eigen::MatrixXd::Constant(n, n, off);
  out.sigma.diagonal().setConstant(diag);
  return out;
}

SteadyStateCovariance covariance_star(int n, double tau, double b) {
  if (n < 3) throw InvalidSpec("covariance_star: n must be at least 3");
  const double x_per = tau;            // peripheral modes, lambda = 1
  const double x_full = static_cast<double>(n) * tau;  // center mode, lambda = n
  if (!(x_full < kHalfPi)) throw StabilityViolation("covariance_star: n tau >= pi/2");
  const double g1 = g_function(x_per);
  const double gn = g_function(x_full);
  const double nn = static_cast<double>(n);
  const double b2 = b * b;
  // Peripheral block: a on the diagonal, d off it; center row/column: e;
  // center diagonal: s.
  const double a = b2 / (2.0 * nn * (nn - 1.0)) * (nn * (nn - 2.0) * g1 + gn / nn);
  const double d = b2 / (2.0 * nn * (nn - 1.0)) * (-nn * g1 + gn / nn);
  const double s = b2 * (nn - 1.0) / (2.0 * nn * nn) * gn;
  const double e = -b2 / (2.0 * nn * nn) * gn;
  SteadyStateCovariance out;
  out.sigma = Eigen::MatrixXd::Constant(n, n, d);
  out.sigma.diagonal().setConstant(a);
  out.sigma.row(n - 1).setConstant(e);
  out.sigma.col(n - 1).setConstant(e);
  out.sigma(n - 1, n - 1) = s;
  return out;
}

CovarianceBounds covariance_bounds(const NetworkModel& model, BoundsDomain domain,
                                   double sbar_lo, double sbar_hi) {
  const int n = model.n();
  const Eigen::VectorXd& lam = model.spec_decomp.eigenvalues;
  const FExtrema ext = f_extrema(sbar_lo, sbar_hi);

  CovarianceBounds out;
  out.domain = domain;
  out.f_lower = ext.f_lower;
  if (domain == BoundsDomain::GraphSpecific) {
    const double x2 = lam(1) * model.tau;
    const double xn = lam(n - 1) * model.tau;
    if (!(x2 > 0.0 && xn < kHalfPi))
      throw StabilityViolation("covariance_bounds: spectrum-delay products leave (0, pi/2)");
    // f is unimodal, so its extreme over {lambda_k tau} is at lambda_2 or lambda_n.
    out.f_upper = std::max(f_function(x2), f_function(xn));
    out.domain_lo = x2;
    out.domain_hi = xn;
  } else {
    for (int k = 1; k < n; ++k) {
      const double x = lam(k) * model.tau;
      if (x < sbar_lo || x > sbar_hi)
        throw DomainViolation("covariance_bounds: lambda_k tau outside the uniform domain");
    }
    out.f_upper = ext.f_upper_on_sbar;
    out.domain_lo = sbar_lo;
    out.domain_hi = sbar_hi;
  }

  const double nn = static_cast<double>(n);
  const double scale = model.b * model.b * model.tau;
  out.diag_lo = (nn - 1.0) / nn * scale * out.f_lower;
  out.diag_hi = (nn - 1.0) / nn * scale * out.f_upper;
  out.offdiag_lo = (nn - 2.0) / (2.0 * nn) * scale * out.f_lower - 0.5 * scale * out.f_upper;
  out.offdiag_hi = (nn - 2.0) / (2.0 * nn) * scale * out.f_upper - 0.5 * scale * out.f_lower;
  return out;
}

}  // namespace cascade
