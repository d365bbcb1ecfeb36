#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace cascade {

enum class Topology { Complete, Star, Path, PCycle, ErdosRenyi, Explicit };

// Declarative description of a communication graph. Star center is node n
// (index n-1). PCycle connects each node to its p nearest neighbours on each
// side, so it needs 2p + 1 <= n.
struct GraphSpec {
  int n = 0;
  Topology topology = Topology::Complete;
  int p = 0;                    // PCycle only
  double edge_prob = 0.0;       // ErdosRenyi only
  std::uint64_t seed = 0;       // ErdosRenyi only
  Eigen::MatrixXd weights;      // Explicit only

  static GraphSpec complete(int n);
  static GraphSpec star(int n);
  static GraphSpec path(int n);
  static GraphSpec pcycle(int n, int p);
  static GraphSpec erdos_renyi(int n, double edge_prob, std::uint64_t seed);
  static GraphSpec explicit_weights(Eigen::MatrixXd weights);
};

struct Spectrum {
  Eigen::VectorXd eigenvalues;   // ascending, eigenvalues(0) ~ 0
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, sign-normalized
};

struct StabilityReport {
  bool stable = false;
  double margin = 0.0;  // pi/(2 lambda_n) - tau
};

// Centering projector M = I - (1/n) 11^T.
Eigen::MatrixXd centering_matrix(int n);

// Weighted Laplacian of the spec. Validates the spec and, for ErdosRenyi and
// Explicit inputs, checks connectivity of the realized graph.
Eigen::MatrixXd build_laplacian(const GraphSpec& spec);

// Full symmetric eigendecomposition, ascending eigenvalues. Each eigenvector
// column is flipped so its largest-magnitude entry is positive.
Spectrum spectrum(const Eigen::MatrixXd& laplacian);

// Delay margin against the largest eigenvalue.
StabilityReport check_stability(const Spectrum& spec, double tau);

// (1/(n-1)) * sum_{k>=2} 1/lambda_k.
double effective_resistance(const Spectrum& spec);

// Scale-relative connectivity test on an eigenvalue vector.
bool spectrally_connected(const Eigen::VectorXd& eigenvalues);

// Draws G(n, edge_prob) graphs until one is connected and satisfies
// tau < pi/(2 lambda_n); the successful draw's own seed is recorded in the
// returned spec so it reproduces standalone.
GraphSpec random_connected_graph(int n, double edge_prob, std::uint64_t seed,
                                 double tau, int max_retries = 100);

}  // namespace cascade
