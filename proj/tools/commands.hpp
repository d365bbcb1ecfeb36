#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cascade/defaults.hpp"

namespace cascade::cli {

// Graph and SDE parameters shared by every subcommand that builds a model.
// n < 0 means "not provided"; commands that need a concrete network treat
// that as a usage error.
struct ModelOptions {
  std::string topology = "complete";
  int n = -1;
  int p = 1;
  double edge_prob = 0.5;
  std::uint64_t graph_seed = 1;
  std::string weights_file;
  double tau = defaults::tau;
  double b = defaults::b;
};

struct RiskOptions {
  double c = defaults::c;
  double alpha = defaults::alpha;
  double epsilon = defaults::epsilon;
  double y_f = defaults::y_f;
};

struct AnalyzeOptions {
  ModelOptions model;
  std::string out_dir = ".";
};

struct ProfileOptions {
  ModelOptions model;
  RiskOptions risk;
  std::string failures_file;
  std::vector<int> fail_agents;    // 1-based
  std::vector<double> fail_values; // pairs up with fail_agents; y_f fills gaps
  std::string out_dir = ".";
};

struct UpdateOptions {
  std::string state_file;
  int agent = 0;  // 1-based
  double value = 0.0;
  bool value_given = false;
  RiskOptions risk;
  bool time_recompute = false;
  bool report_fit = false;
  std::string out_dir = ".";
};

struct BoundsOptions {
  ModelOptions model;
  RiskOptions risk;
  std::string domain = "graph";  // graph | uniform
  std::string out_dir = ".";
};

struct ValidateOptions {
  std::string suite;  // covariance | conditional | tails | bounds | all
  int n = -1;         // suite-specific default applied when < 0
  long graphs = 1000;
  long samples = 1000000;
  std::uint64_t seed = 1;
  int threads = 1;
  ModelOptions model;  // tau, b (topology ignored by most suites)
  RiskOptions risk;
  std::string out_dir = ".";
};

struct SweepOptions {
  ModelOptions model;
  RiskOptions risk;
  std::string mode = "count";  // count | location
  int target = -1;             // 1-based; default n
  int max_m = -1;              // count mode; default n - 1
  std::string out_dir = ".";
};

int cmd_analyze(const AnalyzeOptions& opt);
int cmd_profile(const ProfileOptions& opt);
int cmd_update(const UpdateOptions& opt);
int cmd_bounds(const BoundsOptions& opt);
int cmd_validate(const ValidateOptions& opt);
int cmd_sweep(const SweepOptions& opt);

}  // namespace cascade::cli
