#include "cascade/graph.hpp"

#include <cmath>
#include <random>
#include <string>

#include "cascade/errors.hpp"
#include "cascade/numerics.hpp"

namespace cascade {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidSpec(what);
}

Eigen::MatrixXd laplacian_from_weights(const Eigen::MatrixXd& w) {
  const Eigen::VectorXd deg = w.rowwise().sum();
  Eigen::MatrixXd l = -w;
  l.diagonal() = deg;
  return l;
}

Eigen::MatrixXd erdos_renyi_weights(int n, double edge_prob, std::uint64_t seed) {
  // One fixed traversal order (i<j) so a seed pins the draw exactly.
  std::mt19937_64 eng(mix_seed(seed, 0x4745'5250'4852'4147ull));
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
      if (u < edge_prob) w(i, j) = w(j, i) = 1.0;
    }
  return w;
}

}  // namespace

GraphSpec GraphSpec::complete(int n) {
  GraphSpec s;
  s.n = n;
  s.topology = Topology::Complete;
  return s;
}

GraphSpec GraphSpec::star(int n) {
  GraphSpec s;
  s.n = n;
  s.topology = Topology::Star;
  return s;
}

GraphSpec GraphSpec::path(int n) {
  GraphSpec s;
  s.n = n;
  s.topology = Topology::Path;
  return s;
}

GraphSpec GraphSpec::pcycle(int n, int p) {
  GraphSpec s;
  s.n = n;
  s.topology = Topology::PCycle;
  s.p = p;
  return s;
}

GraphSpec GraphSpec::erdos_renyi(int n, double edge_prob, std::uint64_t seed) {
  GraphSpec s;
  s.n = n;
  s.topology = Topology::ErdosRenyi;
  s.edge_prob = edge_prob;
  s.seed = seed;
  return s;
}

GraphSpec GraphSpec::explicit_weights(Eigen::MatrixXd weights) {
  GraphSpec s;
  s.n = static_cast<int>(weights.rows());
  s.topology = Topology::Explicit;
  s.weights = std::move(weights);
  return s;
}

Eigen::MatrixXd centering_matrix(int n) {
  require(n >= 1, "centering_matrix: n must be positive");
  return Eigen::MatrixXd::Identity(n, n) -
         Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
}

Eigen::MatrixXd build_laplacian(const GraphSpec& spec) {
  const int n = spec.n;
  require(n >= 2, "build_laplacian: need at least two agents");
  switch (spec.topology) {
    case Topology::Complete: {
      Eigen::MatrixXd w = Eigen::MatrixXd::Ones(n, n);
      w.diagonal().setZero();
      return laplacian_from_weights(w);
    }
    case Topology::Star: {
      Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n - 1; ++i) w(i, n - 1) = w(n - 1, i) = 1.0;
      return laplacian_from_weights(w);
    }
    case Topology::Path: {
      Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i + 1 < n; ++i) w(i, i + 1) = w(i + 1, i) = 1.0;
      return laplacian_from_weights(w);
    }
    case Topology::PCycle: {
      require(spec.p >= 1, "build_laplacian: p-cycle needs p >= 1");
      require(2 * spec.p + 1 <= n, "build_laplacian: p-cycle needs 2p+1 <= n");
      Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int d = 1; d <= spec.p; ++d) {
          const int j = (i + d) % n;
          w(i, j) = w(j, i) = 1.0;
        }
      return laplacian_from_weights(w);
    }
    case Topology::ErdosRenyi: {
      require(spec.edge_prob > 0.0 && spec.edge_prob < 1.0,
              "build_laplacian: edge_prob must lie in (0,1)");
      const Eigen::MatrixXd l =
          laplacian_from_weights(erdos_renyi_weights(n, spec.edge_prob, spec.seed));
      if (!spectrally_connected(spectrum(l).eigenvalues))
        throw DisconnectedGraph("build_laplacian: Erdos-Renyi draw is disconnected");
      return l;
    }
    case Topology::Explicit: {
      const Eigen::MatrixXd& w = spec.weights;
      require(w.rows() == n && w.cols() == n, "build_laplacian: weights must be n x n");
      require(w.diagonal().cwiseAbs().maxCoeff() == 0.0,
              "build_laplacian: weights need a zero diagonal");
      require((w - w.transpose()).cwiseAbs().maxCoeff() <=
                  1e-12 * std::max(1.0, w.cwiseAbs().maxCoeff()),
              "build_laplacian: weights must be symmetric");
      require(w.minCoeff() >= 0.0, "build_laplacian: weights must be nonnegative");
      const Eigen::MatrixXd l = laplacian_from_weights(w);
      if (!spectrally_connected(spectrum(l).eigenvalues))
        throw DisconnectedGraph("build_laplacian: explicit weights are disconnected");
      return l;
    }
  }
  throw InvalidSpec("build_laplacian: unknown topology");
}

Spectrum spectrum(const Eigen::MatrixXd& laplacian) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
  if (solver.info() != Eigen::Success)
    throw EigSolverFailure("spectrum: eigensolver did not converge");
  Spectrum s;
  s.eigenvalues = solver.eigenvalues();
  s.eigenvectors = solver.eigenvectors();
  // Deterministic sign: largest-magnitude entry of each column positive.
  for (int k = 0; k < s.eigenvectors.cols(); ++k) {
    int imax = 0;
    s.eigenvectors.col(k).cwiseAbs().maxCoeff(&imax);
    if (s.eigenvectors(imax, k) < 0.0) s.eigenvectors.col(k) = -s.eigenvectors.col(k);
  }
  return s;
}

StabilityReport check_stability(const Spectrum& spec, double tau) {
  if (tau < 0.0) throw DomainError("check_stability: tau must be nonnegative");
  const double lambda_n = spec.eigenvalues(spec.eigenvalues.size() - 1);
  StabilityReport r;
  if (lambda_n <= 0.0) {
    // Edgeless graph never destabilizes; margin is unbounded.
    r.stable = true;
    r.margin = std::numeric_limits<double>::infinity();
    return r;
  }
  r.margin = kPi / (2.0 * lambda_n) - tau;
  r.stable = r.margin > 0.0;
  return r;
}

bool spectrally_connected(const Eigen::VectorXd& eigenvalues) {
  const int n = static_cast<int>(eigenvalues.size());
  if (n < 2) return false;
  const double lambda_n = eigenvalues(n - 1);
  return eigenvalues(1) > 1e-9 * std::max(1.0, lambda_n);
}

double effective_resistance(const Spectrum& spec) {
  const int n = static_cast<int>(spec.eigenvalues.size());
  if (!spectrally_connected(spec.eigenvalues))
    throw DisconnectedGraph("effective_resistance: graph is disconnected");
  double sum = 0.0;
  for (int k = 1; k < n; ++k) sum += 1.0 / spec.eigenvalues(k);
  return sum / static_cast<double>(n - 1);
}

GraphSpec random_connected_graph(int n, double edge_prob, std::uint64_t seed,
                                 double tau, int max_retries) {
  require(edge_prob > 0.0 && edge_prob < 1.0,
          "random_connected_graph: edge_prob must lie in (0,1)");
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    const std::uint64_t draw_seed = seed + static_cast<std::uint64_t>(attempt);
    const Eigen::MatrixXd l =
        laplacian_from_weights(erdos_renyi_weights(n, edge_prob, draw_seed));
    const Spectrum s = spectrum(l);
    if (!spectrally_connected(s.eigenvalues)) continue;
    if (!check_stability(s, tau).stable) continue;
    return GraphSpec::erdos_renyi(n, edge_prob, draw_seed);
  }
  throw RetryExhausted(
      "random_connected_graph: no connected stable draw within the retry cap; "
      "lower tau or raise edge_prob");
}

}  // namespace cascade
