#include "cascade/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "cascade/errors.hpp"
#include "cascade/numerics.hpp"

namespace cascade {

namespace {

struct StepPlan {
  int delay_steps = 0;       // K, ring buffer holds K+1 states
  long total_steps = 0;
  long burn_steps = 0;
  long stride_steps = 1;
};

StepPlan plan_steps(const NetworkModel& model, const SimConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw InvalidSpec("SimConfig: dt must be positive");
  if (!(cfg.horizon > cfg.burn_in) || cfg.burn_in < 0.0)
    throw InvalidSpec("SimConfig: need 0 <= burn_in < horizon");
  if (cfg.trajectories < 1) throw InvalidSpec("SimConfig: trajectories >= 1");

  StepPlan plan;
  if (model.tau > 0.0) {
    const double ratio = model.tau / cfg.dt;
    const long k = std::lround(ratio);
    if (k < 20 || std::abs(ratio - static_cast<double>(k)) > 1e-9 * ratio)
      throw InvalidSpec("SimConfig: dt must divide tau with tau/dt >= 20");
    plan.delay_steps = static_cast<int>(k);
  }
  plan.total_steps = std::lround(cfg.horizon / cfg.dt);
  plan.burn_steps = std::lround(cfg.burn_in / cfg.dt);
  const double stride_s = cfg.stride > 0.0 ? cfg.stride : 5.0 * model.tau;
  plan.stride_steps = std::max<long>(1, std::lround(stride_s / cfg.dt));
  return plan;
}

Eigen::VectorXd initial_state(const NetworkModel& model, const SimConfig& cfg) {
  const int n = model.n();
  switch (cfg.initial.kind) {
    case InitialKind::Zeros:
      return Eigen::VectorXd::Zero(n);
    case InitialKind::Constant:
      return Eigen::VectorXd::Constant(n, cfg.initial.value);
    case InitialKind::Supplied:
      if (cfg.initial.vec.size() != n)
        throw InvalidSpec("SimConfig: supplied initial state has wrong length");
      return cfg.initial.vec;
  }
  throw InvalidSpec("SimConfig: unknown initial kind");
}

struct TrajectoryMoments {
  Eigen::MatrixXd acc;  // sum of y y^T over retained samples
  long count = 0;
  double drift = 0.0;   // network-average displacement over the horizon
};

TrajectoryMoments run_trajectory(const NetworkModel& model, const SimConfig& cfg,
                                 const StepPlan& plan, int traj_index) {
  const int n = model.n();
  const int slots = plan.delay_steps + 1;
  const double h = cfg.dt;
  const double noise = model.b * std::sqrt(h);
  const Eigen::VectorXd x0 = initial_state(model, cfg);
  const double blowup =
      1e6 * model.b * std::sqrt(cfg.horizon) + 1e3 * x0.cwiseAbs().maxCoeff();

  NormalRng rng(cfg.seed, static_cast<std::uint64_t>(traj_index));
  // Constant history fills every slot; slot (m % slots) holds x_m, so just
  // before writing x_{m+1} the slot ((m+1) % slots) still holds x_{m-K}.
  Eigen::MatrixXd ring(n, slots);
  for (int s = 0; s < slots; ++s) ring.col(s) = x0;

  TrajectoryMoments out;
  out.acc = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd x = x0, xi(n), y(n);
  const double avg0 = x0.mean();

  for (long m = 0; m < plan.total_steps; ++m) {
    const int delayed_slot = static_cast<int>((m + 1) % slots);
    for (int i = 0; i < n; ++i) xi(i) = rng.normal();
    Eigen::VectorXd x_next = x;
    x_next.noalias() -= h * (model.laplacian * ring.col(delayed_slot));
    x_next.noalias() += noise * xi;
    x = std::move(x_next);
    ring.col(delayed_slot) = x;

    if (blowup > 0.0 && x.cwiseAbs().maxCoeff() > blowup)
      throw NumericalBlowup("simulate_trajectories: state exceeded blowup guard");

    const long after_burn = m + 1 - plan.burn_steps;
    if (after_burn > 0 && after_burn % plan.stride_steps == 0) {
      y = x;
      y.array() -= x.mean();
      out.acc.selfadjointView<Eigen::Lower>().rankUpdate(y);
      ++out.count;
    }
  }
  out.drift = x.mean() - avg0;
  return out;
}

}  // namespace

EmpiricalCovariance simulate_trajectories(const NetworkModel& model, const SimConfig& cfg) {
  const StepPlan plan = plan_steps(model, cfg);
  const int n = model.n();
  const int traj = cfg.trajectories;
  const int threads = std::max(1, cfg.threads);

  std::vector<TrajectoryMoments> moments(traj);
  if (threads == 1 || traj == 1) {
    for (int t = 0; t < traj; ++t) moments[t] = run_trajectory(model, cfg, plan, t);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    std::atomic<int> next{0};
    for (int w = 0; w < std::min(threads, traj); ++w) {
      pool.emplace_back([&, w] {
        try {
          while (true) {
            const int t = next.fetch_add(1);
            if (t >= traj) break;
            moments[t] = run_trajectory(model, cfg, plan, t);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Pairwise tree over the trajectory order: the reduction is identical no
  // matter how many threads produced the shards.
  std::vector<TrajectoryMoments> level = std::move(moments);
  while (level.size() > 1) {
    std::vector<TrajectoryMoments> up;
    up.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      TrajectoryMoments merged;
      merged.acc = level[i].acc + level[i + 1].acc;
      merged.count = level[i].count + level[i + 1].count;
      merged.drift = level[i].drift + level[i + 1].drift;
      up.push_back(std::move(merged));
    }
    if (level.size() % 2 == 1) up.push_back(std::move(level.back()));
    level = std::move(up);
  }

  EmpiricalCovariance emp;
  emp.samples = level[0].count;
  if (emp.samples == 0) throw InvalidSpec("simulate_trajectories: no retained samples");
  emp.sigma_hat = level[0].acc.selfadjointView<Eigen::Lower>();
  emp.sigma_hat /= static_cast<double>(emp.samples);
  emp.stderr_scale = 1.0 / std::sqrt(static_cast<double>(emp.samples));
  emp.mean_drift = level[0].drift / static_cast<double>(traj);

  // Network average is driven only by the projected noise, variance b^2 T / n.
  emp.mean_drift_stderr = model.b * std::sqrt(cfg.horizon / static_cast<double>(n)) /
                          std::sqrt(static_cast<double>(traj));
  return emp;
}

ConditionalCheckResult gaussian_conditional_check(const SteadyStateCovariance& sigma,
                                                  const FailureObservation& obs, int j,
                                                  long samples, double window_h,
                                                  std::uint64_t seed) {
  const int n = sigma.n();
  obs.validate(n);
  if (j < 0 || j >= n) throw InvalidSpec("gaussian_conditional_check: target out of range");
  for (int idx : obs.indices)
    if (idx == j) throw TargetObserved("gaussian_conditional_check: target observed");
  if (!(window_h > 0.0)) throw InvalidSpec("gaussian_conditional_check: window_h > 0");
  if (samples < 1) throw InvalidSpec("gaussian_conditional_check: samples >= 1");

  // Square-root factor restricted to the rows we actually need.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma.sigma);
  if (es.info() != Eigen::Success)
    throw EigSolverFailure("gaussian_conditional_check: eigensolver failed");
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  const int m = obs.m();
  Eigen::MatrixXd rows(m + 1, n);
  for (int a = 0; a < m; ++a) rows.row(a) = es.eigenvectors().row(obs.indices[a]);
  rows.row(m) = es.eigenvectors().row(j);
  rows = rows * lam.cwiseSqrt().asDiagonal();

  constexpr int kBatch = 8192;
  NormalRng rng(seed, 0x434845434Bull);
  Eigen::MatrixXd z(n, kBatch);
  Eigen::MatrixXd y(m + 1, kBatch);

  long accepted = 0;
  double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
  Eigen::VectorXd obs_sum = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd obs_outer = Eigen::MatrixXd::Zero(m, m);

  long remaining = samples;
  while (remaining > 0) {
    const int cols = static_cast<int>(std::min<long>(kBatch, remaining));
    remaining -= cols;
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < n; ++r) z(r, c) = rng.normal();
    y.leftCols(cols).noalias() = rows * z.leftCols(cols);
    for (int c = 0; c < cols; ++c) {
      bool inside = true;
      for (int a = 0; a < m && inside; ++a)
        inside = std::abs(y(a, c) - obs.values(a)) <= window_h;
      if (!inside) continue;
      ++accepted;
      const double v = y(m, c);
      s1 += v;
      s2 += v * v;
      s3 += v * v * v;
      s4 += v * v * v * v;
      for (int a = 0; a < m; ++a) obs_sum(a) += y(a, c);
      obs_outer.noalias() += y.col(c).head(m) * y.col(c).head(m).transpose();
    }
  }

  if (accepted < 1000)
    throw InsufficientSamples("gaussian_conditional_check: fewer than 1000 retained draws");

  const double cnt = static_cast<double>(accepted);
  ConditionalCheckResult res;
  res.accepted = accepted;
  res.mu_hat = s1 / cnt;
  const double m2 = s2 / cnt - res.mu_hat * res.mu_hat;
  res.sigma_sq_hat = m2 * cnt / (cnt - 1.0);
  // Central fourth moment from raw sums; sampling variance of s^2 is
  // (m4 - m2^2)/N for iid draws.
  const double mu = res.mu_hat;
  const double m4 = (s4 - 4.0 * mu * s3 + 6.0 * mu * mu * s2 - 3.0 * mu * mu * mu * mu * cnt) / cnt;
  res.mu_stderr = std::sqrt(std::max(m2, 0.0) / cnt);
  res.var_stderr = std::sqrt(std::max(m4 - m2 * m2, 0.0) / cnt);
  if (m > 0) {
    res.obs_mean = obs_sum / cnt;
    res.obs_cov = obs_outer / cnt - res.obs_mean * res.obs_mean.transpose();
  } else {
    res.obs_mean = Eigen::VectorXd();
    res.obs_cov = Eigen::MatrixXd();
  }
  return res;
}

TailCheckResult tail_probability_check(const SteadyStateCovariance& sigma, int i, int j,
                                       double delta_star, double z,
                                       const RiskParams& params, long samples,
                                       std::uint64_t seed) {
  params.validate();
  const int n = sigma.n();
  if (i < 0 || i >= n || j < 0 || j >= n || i == j)
    throw InvalidSpec("tail_probability_check: bad agent pair");
  if (samples < 100000)
    throw InvalidSpec("tail_probability_check: samples must be at least 1e5");
  if (!(delta_star >= 0.0) || !(z >= 0.0))
    throw InvalidSpec("tail_probability_check: delta_star, z nonnegative");

  const double sig_i = std::sqrt(sigma.sigma(i, i));
  const double sig_j = std::sqrt(sigma.sigma(j, j));
  const double rho = sigma.correlation(i, j);
  if (std::abs(rho) >= 1.0 - 1e-12)
    throw DegenerateCorrelation("tail_probability_check: |rho| too close to 1");
  const double alarm = params.c * (delta_star + 1.0) / (delta_star + params.alpha);
  const double cross = sig_j * rho, perp = sig_j * std::sqrt(1.0 - rho * rho);

  NormalRng rng(seed, 0x5441494Cull);
  long accepted = 0, hits = 0;
  for (long d = 0; d < samples; ++d) {
    const double z1 = rng.normal();
    const double yi = sig_i * z1;
    if (std::abs(yi) <= alarm) {
      rng.normal();  // keep the stream aligned per draw
      continue;
    }
    const double yj = cross * z1 + perp * rng.normal();
    ++accepted;
    if (std::abs(yj) > z) ++hits;
  }
  if (accepted == 0)
    throw EmptyConditioningSet("tail_probability_check: nothing satisfied the alarm range");

  TailCheckResult res;
  res.accepted = accepted;
  res.p_hat = static_cast<double>(hits) / static_cast<double>(accepted);
  res.stderr_value =
      std::sqrt(std::max(res.p_hat * (1.0 - res.p_hat), 0.0) / static_cast<double>(accepted));
  return res;
}

}  // namespace cascade
