#include "cascade/conditional.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "cascade/errors.hpp"

namespace cascade {

namespace {

constexpr double kDegenerateRel = 1e-14;  // on conditional variance vs marginal
constexpr double kPivotRel = 1e-12;       // on min pivot^2 vs trace

double clamp_nonneg(double v) { return v < 0.0 ? 0.0 : v; }

}  // namespace

void FailureObservation::validate(int n) const {
  if (values.size() != static_cast<Eigen::Index>(indices.size()))
    throw InvalidSpec("FailureObservation: indices and values disagree in length");
  if (m() >= n) throw InvalidSpec("FailureObservation: need m < n");
  std::set<int> seen;
  for (int idx : indices) {
    if (idx < 0 || idx >= n) throw InvalidSpec("FailureObservation: index out of range");
    if (!seen.insert(idx).second)
      throw InvalidSpec("FailureObservation: duplicate index");
  }
}

bool ConditioningState::observes(int agent) const {
  return std::find(indices_.begin(), indices_.end(), agent) != indices_.end();
}

Eigen::VectorXd ConditioningState::half_solve(const Eigen::VectorXd& r) const {
  if (m() == 0) return Eigen::VectorXd();
  return l_.triangularView<Eigen::Lower>().solve(r);
}

Eigen::VectorXd ConditioningState::cross_column(const SteadyStateCovariance& sigma,
                                                int j) const {
  Eigen::VectorXd r(m());
  for (int i = 0; i < m(); ++i) r(i) = sigma.sigma(indices_[i], j);
  return r;
}

void ConditioningState::append(int k, double y_fk, const SteadyStateCovariance& sigma) {
  if (observes(k)) throw InvalidSpec("ConditioningState: agent already observed");
  if (k < 0 || k >= sigma.n()) throw InvalidSpec("ConditioningState: index out of range");
  const int old_m = m();
  const double sigma_kk = sigma.sigma(k, k);
  const Eigen::VectorXd u_k = half_solve(cross_column(sigma, k));
  const double s2_k = sigma_kk - u_k.squaredNorm();
  if (s2_k <= kDegenerateRel * sigma_kk)
    throw DegenerateUpdate("ConditioningState: new observation carries no fresh information");
  const double pivot = std::sqrt(s2_k);

  Eigen::MatrixXd l_new = Eigen::MatrixXd::Zero(old_m + 1, old_m + 1);
  l_new.topLeftCorner(old_m, old_m) = l_;
  l_new.row(old_m).head(old_m) = u_k.transpose();
  l_new(old_m, old_m) = pivot;
  l_ = std::move(l_new);

  Eigen::VectorXd c_new(old_m + 1);
  c_new.head(old_m) = c_;
  c_new(old_m) = (y_fk - u_k.dot(c_.head(old_m))) / pivot;
  c_ = std::move(c_new);

  indices_.push_back(k);
}

ConditioningState ConditioningState::restore(std::vector<int> indices,
                                             Eigen::MatrixXd factor,
                                             Eigen::VectorXd solved_values) {
  const int m = static_cast<int>(indices.size());
  if (factor.rows() != m || factor.cols() != m || solved_values.size() != m)
    throw InvalidSpec("ConditioningState::restore: inconsistent shapes");
  std::set<int> seen(indices.begin(), indices.end());
  if (static_cast<int>(seen.size()) != m)
    throw InvalidSpec("ConditioningState::restore: duplicate index");
  ConditioningState s;
  s.indices_ = std::move(indices);
  s.l_ = std::move(factor);
  s.c_ = std::move(solved_values);
  return s;
}

ConditionalLaw condition(const SteadyStateCovariance& sigma, const FailureObservation& obs,
                         int j) {
  const int n = sigma.n();
  obs.validate(n);
  if (j < 0 || j >= n) throw InvalidSpec("condition: target out of range");
  for (int idx : obs.indices)
    if (idx == j) throw TargetObserved("condition: target is observed");

  ConditionalLaw law;
  law.target = j;
  const int m = obs.m();
  if (m == 0) {
    law.mu_tilde = 0.0;
    law.sigma_tilde_sq = sigma.sigma(j, j);
    return law;
  }

  Eigen::MatrixXd block(m, m);
  Eigen::VectorXd cross(m);
  for (int a = 0; a < m; ++a) {
    cross(a) = sigma.sigma(obs.indices[a], j);
    for (int bcol = 0; bcol < m; ++bcol)
      block(a, bcol) = sigma.sigma(obs.indices[a], obs.indices[bcol]);
  }

  Eigen::LLT<Eigen::MatrixXd> llt(block);
  if (llt.info() != Eigen::Success)
    throw SingularBlock("condition: observed block is not positive definite");
  const double min_pivot = llt.matrixLLT().diagonal().minCoeff();
  if (min_pivot * min_pivot <= kPivotRel * block.trace())
    throw SingularBlock("condition: observed block is numerically singular");

  const Eigen::VectorXd w = llt.solve(obs.values);
  law.mu_tilde = cross.dot(w);
  law.sigma_tilde_sq = clamp_nonneg(sigma.sigma(j, j) - cross.dot(llt.solve(cross)));
  return law;
}

ConditionalLaw condition_complete_closed_form(int n, int m, const Eigen::VectorXd& y_f,
                                              double sigma_j_sq) {
  if (m >= n || m < 0) throw InvalidCount("condition_complete_closed_form: need 0 <= m < n");
  if (y_f.size() != m) throw InvalidSpec("condition_complete_closed_form: y_f length != m");
  ConditionalLaw law;
  law.mu_tilde = m == 0 ? 0.0 : -y_f.sum() / static_cast<double>(n - m);
  law.sigma_tilde_sq =
      sigma_j_sq * (1.0 - static_cast<double>(m) /
                              (static_cast<double>(n - 1) * static_cast<double>(n - m)));
  return law;
}

ConditionalLaw condition_star_closed_form(int n, int m, const Eigen::VectorXd& y_f,
                                          double tau, double b, StarCase star_case, int j) {
  if (n < 3) throw InvalidSpec("condition_star_closed_form: n must be at least 3");
  if (y_f.size() != m) throw InvalidSpec("condition_star_closed_form: y_f length != m");
  const int center = n - 1;
  const double nn = static_cast<double>(n);
  const double g1 = g_function(tau);
  const double gn = g_function(nn * tau);
  const double b2 = b * b;
  const double ysum = m == 0 ? 0.0 : y_f.sum();
  ConditionalLaw law;
  law.target = j;

  if (star_case == StarCase::PeripheryOnly) {
    // Observed set lives on the periphery; by exchangeability only 1^T y_f
    // enters. Delta is the determinant-style normalizer of the observed block.
    if (m < 1 || m > n - 1)
      throw InvalidCase("condition_star_closed_form: periphery case needs 1 <= m <= n-1");
    const double delta = nn * nn * (nn - m - 1.0) * g1 + static_cast<double>(m) * gn;
    if (j == center) {
      const double s_center = b2 * (nn - 1.0) / (2.0 * nn * nn) * gn;
      law.mu_tilde = -(nn - 1.0) * gn * ysum / delta;
      law.sigma_tilde_sq = clamp_nonneg(s_center * nn * nn * (nn - m - 1.0) * g1 / delta);
      return law;
    }
    if (m > n - 2)
      throw InvalidCase("condition_star_closed_form: no unobserved peripheral target left");
    law.mu_tilde = (-nn * nn * g1 + gn) * ysum / delta;
    law.sigma_tilde_sq =
        clamp_nonneg(0.5 * b2 * g1 * (1.0 + (gn - nn * nn * g1) / delta));
    return law;
  }

  // Center included among the failures; remaining agents are exchangeable
  // peripherals and the law collapses to the complete-graph shape with the
  // peripheral gain g(tau).
  if (m < 1) throw InvalidCase("condition_star_closed_form: center case needs m >= 1");
  if (j == center)
    throw InvalidCase("condition_star_closed_form: center is observed in this case");
  if (m >= n) throw InvalidCase("condition_star_closed_form: need m < n");
  law.mu_tilde = -ysum / static_cast<double>(n - m);
  law.sigma_tilde_sq =
      clamp_nonneg(0.5 * b2 * g1 * (1.0 - 1.0 / static_cast<double>(n - m)));
  return law;
}

ConditioningState init_state(const SteadyStateCovariance& sigma,
                             const FailureObservation& obs) {
  obs.validate(sigma.n());
  ConditioningState state;
  for (int a = 0; a < obs.m(); ++a) {
    try {
      state.append(obs.indices[a], obs.values(a), sigma);
    } catch (const DegenerateUpdate& e) {
      throw SingularBlock(std::string("init_state: observed block singular at index ") +
                          std::to_string(obs.indices[a]) + ": " + e.what());
    }
  }
  return state;
}

LawCache init_laws(const ConditioningState& state, const SteadyStateCovariance& sigma,
                   const std::vector<int>& targets) {
  LawCache laws;
  laws.reserve(targets.size());
  for (int j : targets) {
    if (state.observes(j)) throw TargetObserved("init_laws: target is observed");
    TrackedLaw t;
    t.u = state.half_solve(state.cross_column(sigma, j));
    t.law.target = j;
    t.law.mu_tilde = state.m() == 0 ? 0.0 : t.u.dot(state.solved_values());
    t.law.sigma_tilde_sq = clamp_nonneg(sigma.sigma(j, j) - t.u.squaredNorm());
    laws.push_back(std::move(t));
  }
  return laws;
}

void update_one_failure(ConditioningState& state, LawCache& laws, int k, double y_fk,
                        const SteadyStateCovariance& sigma) {
  if (state.observes(k)) throw InvalidSpec("update_one_failure: agent already observed");
  if (k < 0 || k >= sigma.n())
    throw InvalidSpec("update_one_failure: index out of range");

  const double sigma_kk = sigma.sigma(k, k);
  const Eigen::VectorXd u_k = state.half_solve(state.cross_column(sigma, k));
  const double s2_k = sigma_kk - u_k.squaredNorm();
  if (s2_k <= kDegenerateRel * sigma_kk)
    throw DegenerateUpdate("update_one_failure: observation nearly determined by state");
  const double mu_k =
      state.m() == 0 ? 0.0 : u_k.dot(state.solved_values());
  const double pivot = std::sqrt(s2_k);

  // Scalar single-step rule per target, then the cached half-solves grow by
  // the entry that forward substitution against the new row would produce.
  LawCache updated;
  updated.reserve(laws.size());
  for (TrackedLaw& t : laws) {
    if (t.law.target == k) continue;  // target just failed; drop it
    const double sigma_jk = sigma.sigma(t.law.target, k) - t.u.dot(u_k);
    t.law.mu_tilde -= sigma_jk / s2_k * (mu_k - y_fk);
    t.law.sigma_tilde_sq = clamp_nonneg(t.law.sigma_tilde_sq - sigma_jk * sigma_jk / s2_k);
    Eigen::VectorXd u_new(t.u.size() + 1);
    u_new.head(t.u.size()) = t.u;
    u_new(t.u.size()) = sigma_jk / pivot;
    t.u = std::move(u_new);
    updated.push_back(std::move(t));
  }
  laws = std::move(updated);

  state.append(k, y_fk, sigma);
}

}  // namespace cascade
