#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cascade/covariance.hpp"
#include "cascade/errors.hpp"
#include "cascade/montecarlo.hpp"

using namespace cascade;

namespace {

SimConfig base_config(double tau) {
  SimConfig cfg;
  cfg.dt = tau / 25.0;
  cfg.horizon = 600.0;
  cfg.burn_in = 30.0;
  cfg.trajectories = 4;
  cfg.seed = 2024;
  return cfg;
}

}  // namespace

TEST_CASE("noise-free dynamics decay to zero variance") {
  const NetworkModel model = NetworkModel::make(GraphSpec::complete(5), 0.05, 0.0);
  SimConfig cfg = base_config(0.05);
  cfg.horizon = 50.0;
  cfg.burn_in = 5.0;
  cfg.trajectories = 2;
  const EmpiricalCovariance emp = simulate_trajectories(model, cfg);
  CHECK(emp.sigma_hat.cwiseAbs().maxCoeff() < 1e-24);
  CHECK(emp.mean_drift == 0.0);
  CHECK(emp.samples > 0);
}

TEST_CASE("config validation rejects bad grids before any stepping") {
  const NetworkModel model = NetworkModel::make(GraphSpec::complete(5), 0.05, 0.1);
  SimConfig cfg = base_config(0.05);

  SUBCASE("dt must divide tau") {
    cfg.dt = 0.003;
    CHECK_THROWS_AS(simulate_trajectories(model, cfg), InvalidSpec);
  }
  SUBCASE("at least 20 delay substeps") {
    cfg.dt = 0.05 / 10.0;
    CHECK_THROWS_AS(simulate_trajectories(model, cfg), InvalidSpec);
  }
  SUBCASE("positive dt") {
    cfg.dt = 0.0;
    CHECK_THROWS_AS(simulate_trajectories(model, cfg), InvalidSpec);
  }
  SUBCASE("burn-in shorter than horizon") {
    cfg.burn_in = cfg.horizon;
    CHECK_THROWS_AS(simulate_trajectories(model, cfg), InvalidSpec);
  }
  SUBCASE("at least one trajectory") {
    cfg.trajectories = 0;
    CHECK_THROWS_AS(simulate_trajectories(model, cfg), InvalidSpec);
  }
  SUBCASE("supplied initial state must match n") {
    cfg.initial = InitialCondition::supplied(Eigen::VectorXd::Zero(3));
    CHECK_THROWS_AS(simulate_trajectories(model, cfg), InvalidSpec);
  }
}

TEST_CASE("seeded runs are bit-identical, across thread counts too") {
  const NetworkModel model = NetworkModel::make(GraphSpec::path(6), 0.04, 0.3);
  SimConfig cfg = base_config(0.04);
  cfg.horizon = 120.0;
  cfg.burn_in = 10.0;

  const EmpiricalCovariance a = simulate_trajectories(model, cfg);
  const EmpiricalCovariance b = simulate_trajectories(model, cfg);
  CHECK(a.samples == b.samples);
  CHECK((a.sigma_hat - b.sigma_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.mean_drift == b.mean_drift);

  cfg.threads = 2;
  const EmpiricalCovariance c = simulate_trajectories(model, cfg);
  CHECK((a.sigma_hat - c.sigma_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.mean_drift == c.mean_drift);

  cfg.threads = 1;
  cfg.seed += 1;
  const EmpiricalCovariance d = simulate_trajectories(model, cfg);
  CHECK((a.sigma_hat - d.sigma_hat).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("empirical covariance converges to the spectral answer") {
  const NetworkModel model = NetworkModel::make(GraphSpec::complete(5), 0.05, 0.5);
  const EmpiricalCovariance emp = simulate_trajectories(model, base_config(0.05));
  const SteadyStateCovariance exact = steady_state_covariance(model);

  const double scale = exact.sigma(0, 0);
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(emp.sigma_hat(i, i) - exact.sigma(i, i)) < 0.10 * scale);
    for (int j = 0; j < 5; ++j)
      if (i != j) CHECK(std::abs(emp.sigma_hat(i, j) - exact.sigma(i, j)) < 0.10 * scale);
  }
  // Per-sample centering keeps the estimate in the mean-zero subspace exactly.
  CHECK((emp.sigma_hat * Eigen::VectorXd::Ones(5)).cwiseAbs().maxCoeff() <
        1e-12 * scale);
  CHECK(std::abs(emp.mean_drift) < 4.0 * emp.mean_drift_stderr);
  CHECK(emp.stderr_scale == doctest::Approx(1.0 / std::sqrt(double(emp.samples))));
}

TEST_CASE("default stride is five delays") {
  const NetworkModel model = NetworkModel::make(GraphSpec::path(5), 0.04, 0.2);
  SimConfig cfg = base_config(0.04);
  cfg.horizon = 60.0;
  cfg.burn_in = 6.0;
  cfg.stride = -1.0;
  const EmpiricalCovariance a = simulate_trajectories(model, cfg);
  cfg.stride = 5.0 * 0.04;
  const EmpiricalCovariance b = simulate_trajectories(model, cfg);
  CHECK(a.samples == b.samples);
  CHECK((a.sigma_hat - b.sigma_hat).cwiseAbs().maxCoeff() == 0.0);

  cfg.stride = 10.0 * 0.04;
  const EmpiricalCovariance c = simulate_trajectories(model, cfg);
  CHECK(c.samples < a.samples);
}

TEST_CASE("an unstable delay blows past the guard instead of reporting junk") {
  const NetworkModel model = NetworkModel::make_unchecked(GraphSpec::complete(5), 0.8, 0.1);
  SimConfig cfg;
  cfg.dt = 0.8 / 20.0;
  cfg.horizon = 400.0;
  cfg.burn_in = 0.0;
  cfg.trajectories = 1;
  cfg.seed = 9;
  CHECK_THROWS_AS(simulate_trajectories(model, cfg), NumericalBlowup);
}

TEST_CASE("unwindowed sampler check recovers the marginal moments") {
  const auto cov =
      steady_state_covariance(NetworkModel::make(GraphSpec::complete(6), 0.05, 0.3));
  FailureObservation obs;  // nothing observed
  const ConditionalCheckResult r =
      gaussian_conditional_check(cov, obs, 2, 200000, 1.0, 3141);
  CHECK(r.accepted == 200000);
  CHECK(std::abs(r.mu_hat) < 4.0 * r.mu_stderr);
  CHECK(std::abs(r.sigma_sq_hat - cov.variance(2)) < 4.0 * r.var_stderr);
  CHECK(r.obs_mean.size() == 0);
}

TEST_CASE("windowed moments satisfy the exact regression identities") {
  // Within the window the conditional mean is linear in the observed values,
  // so mu_hat must match beta' obs_mean and the windowed variance must match
  // sigma_tilde^2 + beta' Cov(obs) beta, up to sampling error.
  const auto cov =
      steady_state_covariance(NetworkModel::make(GraphSpec::star(8), 0.05, 0.3));
  const int j = 5;
  const double sd0 = std::sqrt(cov.variance(0));

  FailureObservation obs;
  obs.indices = {0, 1};
  obs.values = Eigen::VectorXd(2);
  obs.values << 0.4 * sd0, -0.3 * sd0;

  const ConditionalCheckResult r =
      gaussian_conditional_check(cov, obs, j, 400000, 0.6 * sd0, 2718);
  REQUIRE(r.accepted >= 1000);

  Eigen::MatrixXd s22(2, 2);
  s22 << cov.sigma(0, 0), cov.sigma(0, 1), cov.sigma(1, 0), cov.sigma(1, 1);
  Eigen::VectorXd s21(2);
  s21 << cov.sigma(j, 0), cov.sigma(j, 1);
  const Eigen::VectorXd beta = s22.ldlt().solve(s21);
  const double s_tilde_sq = cov.sigma(j, j) - beta.dot(s21);

  CHECK(std::abs(r.mu_hat - beta.dot(r.obs_mean)) < 4.0 * r.mu_stderr);
  CHECK(std::abs(r.sigma_sq_hat - (s_tilde_sq + beta.dot(r.obs_cov * beta))) <
        4.0 * r.var_stderr);
  // The window is centred on the observation, so the accepted mean sits there.
  CHECK(std::abs(r.obs_mean(0) - obs.values(0)) < 0.05 * sd0);
  CHECK(std::abs(r.obs_mean(1) - obs.values(1)) < 0.05 * sd0);
}

TEST_CASE("conditional check argument guards") {
  const auto cov =
      steady_state_covariance(NetworkModel::make(GraphSpec::complete(5), 0.05, 0.2));
  FailureObservation obs;
  obs.indices = {0};
  obs.values = Eigen::VectorXd::Constant(1, 0.0);

  CHECK_THROWS_AS(gaussian_conditional_check(cov, obs, 0, 10000, 0.1, 1), TargetObserved);
  CHECK_THROWS_AS(gaussian_conditional_check(cov, obs, 2, 10000, 0.0, 1), InvalidSpec);
  CHECK_THROWS_AS(gaussian_conditional_check(cov, obs, 2, 0, 0.1, 1), InvalidSpec);
  // A vanishing window keeps almost nothing and must say so.
  CHECK_THROWS_AS(gaussian_conditional_check(cov, obs, 2, 5000, 1e-9, 1),
                  InsufficientSamples);
}

TEST_CASE("tail rejection estimate matches the quadrature route") {
  SteadyStateCovariance pair;
  pair.sigma = Eigen::MatrixXd(2, 2);
  pair.sigma << 1.0, 0.5, 0.5, 1.0;
  const RiskParams params{};

  const TailCheckResult r = tail_probability_check(pair, 0, 1, 1.0, 0.75, params, 200000, 11);
  REQUIRE(r.accepted > 0);
  const double q = conditional_exceedance(1.0, 1.0, 0.5, 1.0, 0.75, params);
  CHECK(std::abs(r.p_hat - q) < 4.0 * r.stderr_value + 1e-9);

  // z = 0 is exceeded almost surely.
  const TailCheckResult full = tail_probability_check(pair, 0, 1, 1.0, 0.0, params, 100000, 12);
  CHECK(full.p_hat == 1.0);
}

TEST_CASE("tail check argument guards") {
  SteadyStateCovariance pair;
  pair.sigma = Eigen::MatrixXd(2, 2);
  pair.sigma << 1.0, 0.5, 0.5, 1.0;
  const RiskParams params{};

  CHECK_THROWS_AS(tail_probability_check(pair, 0, 0, 1.0, 0.5, params, 200000, 1),
                  InvalidSpec);
  CHECK_THROWS_AS(tail_probability_check(pair, 0, 1, 1.0, 0.5, params, 99999, 1),
                  InvalidSpec);
  CHECK_THROWS_AS(tail_probability_check(pair, 0, 1, -1.0, 0.5, params, 200000, 1),
                  InvalidSpec);

  SteadyStateCovariance twin;
  twin.sigma = Eigen::MatrixXd(2, 2);
  twin.sigma << 1.0, 1.0 - 1e-15, 1.0 - 1e-15, 1.0;
  CHECK_THROWS_AS(tail_probability_check(twin, 0, 1, 1.0, 0.5, params, 200000, 1),
                  DegenerateCorrelation);

  // An unreachable alarm set leaves nothing to condition on.
  SteadyStateCovariance tiny;
  tiny.sigma = Eigen::MatrixXd(2, 2);
  tiny.sigma << 1e-8, 0.0, 0.0, 1e-8;
  CHECK_THROWS_AS(tail_probability_check(tiny, 0, 1, 1e6, 0.5, params, 100000, 1),
                  EmptyConditioningSet);
}
