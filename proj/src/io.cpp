#include "cascade/io.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "cascade/errors.hpp"

namespace cascade::io {

using nlohmann::json;

Eigen::MatrixXd matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty())
    throw InvalidSpec("io: expected a nonempty array of rows");
  const int r = static_cast<int>(rows.size());
  const int c = static_cast<int>(rows.at(0).size());
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i) {
    const json& row = rows.at(i);
    if (static_cast<int>(row.size()) != c)
      throw InvalidSpec("io: ragged matrix rows");
    for (int k = 0; k < c; ++k) m(i, k) = row.at(k).get<double>();
  }
  return m;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidSpec("io: cannot read '" + path + "'");
  return json::parse(in);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string topology_name(Topology t) {
  switch (t) {
    case Topology::Complete: return "complete";
    case Topology::Star: return "star";
    case Topology::Path: return "path";
    case Topology::PCycle: return "pcycle";
    case Topology::ErdosRenyi: return "erdos_renyi";
    case Topology::Explicit: return "explicit";
  }
  throw InvalidSpec("topology_name: unknown topology");
}

Topology topology_from_name(const std::string& name) {
  if (name == "complete") return Topology::Complete;
  if (name == "star") return Topology::Star;
  if (name == "path") return Topology::Path;
  if (name == "pcycle") return Topology::PCycle;
  if (name == "erdos_renyi" || name == "er") return Topology::ErdosRenyi;
  if (name == "explicit") return Topology::Explicit;
  throw InvalidSpec("topology_from_name: unknown topology '" + name + "'");
}

json graph_spec_to_json(const GraphSpec& spec) {
  json j;
  j["n"] = spec.n;
  j["topology"] = topology_name(spec.topology);
  if (spec.topology == Topology::PCycle) j["p"] = spec.p;
  if (spec.topology == Topology::ErdosRenyi) {
    j["edge_prob"] = spec.edge_prob;
    j["seed"] = spec.seed;
  }
  if (spec.topology == Topology::Explicit) j["weights"] = matrix_to_json(spec.weights);
  return j;
}

GraphSpec graph_spec_from_json(const json& j) {
  GraphSpec spec;
  spec.topology = topology_from_name(j.at("topology").get<std::string>());
  if (spec.topology == Topology::Explicit) {
    spec.weights = matrix_from_json(j.at("weights"));
    spec.n = static_cast<int>(spec.weights.rows());
    if (j.contains("n") && j.at("n").get<int>() != spec.n)
      throw InvalidSpec("graph_spec_from_json: n disagrees with weights shape");
    return spec;
  }
  spec.n = j.at("n").get<int>();
  if (spec.topology == Topology::PCycle) spec.p = j.at("p").get<int>();
  if (spec.topology == Topology::ErdosRenyi) {
    spec.edge_prob = j.at("edge_prob").get<double>();
    spec.seed = j.value("seed", 0ull);
  }
  return spec;
}

json spectrum_to_json(const Spectrum& s) {
  json j;
  j["eigenvalues"] = json::array();
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k)
    j["eigenvalues"].push_back(s.eigenvalues(k));
  j["eigenvectors"] = matrix_to_json(s.eigenvectors);
  return j;
}

json stability_to_json(const StabilityReport& r, double tau) {
  json j;
  j["stable"] = r.stable;
  j["margin"] = r.margin;
  j["tau"] = tau;
  return j;
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 26);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json observation_to_json(const FailureObservation& obs) {
  json arr = json::array();
  for (int a = 0; a < obs.m(); ++a)
    arr.push_back(json{{"agent", obs.indices[a] + 1}, {"value", obs.values(a)}});
  return json{{"failures", std::move(arr)}};
}

FailureObservation observation_from_json(const json& j, int n) {
  const json& arr = j.at("failures");
  if (!arr.is_array()) throw InvalidSpec("observation_from_json: failures must be an array");
  FailureObservation obs;
  obs.values = Eigen::VectorXd(arr.size());
  int a = 0;
  for (const json& item : arr) {
    const int agent = item.at("agent").get<int>();
    if (agent < 1 || agent > n)
      throw InvalidSpec("observation_from_json: agent outside 1..n");
    obs.indices.push_back(agent - 1);
    obs.values(a++) = item.at("value").get<double>();
  }
  obs.validate(n);
  return obs;
}

std::string branch_name(RiskBranch b) {
  switch (b) {
    case RiskBranch::Zero: return "Zero";
    case RiskBranch::Finite: return "Finite";
    case RiskBranch::Infinite: return "Infinite";
  }
  throw InvalidSpec("branch_name: unknown branch");
}

json level_to_json(const RiskLevel& lvl) {
  if (lvl.branch == RiskBranch::Infinite) return "inf";
  return lvl.value;
}

json profile_to_json(const RiskProfile& profile) {
  json arr = json::array();
  for (std::size_t j = 0; j < profile.per_agent.size(); ++j) {
    const RiskAssessment& a = profile.per_agent[j];
    arr.push_back(json{{"agent", static_cast<int>(j) + 1},
                       {"var", a.var},
                       {"avar", a.avar},
                       {"level", level_to_json(a.level)},
                       {"branch", branch_name(a.level.branch)}});
  }
  return arr;
}

std::string profile_to_csv(const RiskProfile& profile) {
  std::string out = "agent,var,avar,level,branch\n";
  for (std::size_t j = 0; j < profile.per_agent.size(); ++j) {
    const RiskAssessment& a = profile.per_agent[j];
    out += std::to_string(j + 1);
    out += ',';
    out += format_double(a.var);
    out += ',';
    out += format_double(a.avar);
    out += ',';
    out += a.level.branch == RiskBranch::Infinite ? "inf" : format_double(a.level.value);
    out += ',';
    out += branch_name(a.level.branch);
    out += '\n';
  }
  return out;
}

json bounds_to_json(const CovarianceBounds& b) {
  json j;
  j["diag_lo"] = b.diag_lo;
  j["diag_hi"] = b.diag_hi;
  j["offdiag_lo"] = b.offdiag_lo;
  j["offdiag_hi"] = b.offdiag_hi;
  j["f_lower"] = b.f_lower;
  j["f_upper"] = b.f_upper;
  j["domain"] = b.domain == BoundsDomain::GraphSpecific ? "graph" : "uniform";
  j["domain_lo"] = b.domain_lo;
  j["domain_hi"] = b.domain_hi;
  return j;
}

json best_bound_to_json(const BestAchievableBound& b) {
  json j;
  switch (b.cov_sign) {
    case CovSign::Positive: j["case"] = "positive"; break;
    case CovSign::Negative: j["case"] = "negative"; break;
    case CovSign::Zero: j["case"] = "zero"; break;
  }
  j["frak_A"] = b.frak_A;
  j["level_bound"] = level_to_json(b.level_bound);
  j["branch"] = branch_name(b.level_bound.branch);
  j["kappa_eps"] = b.kappa_eps;
  j["iota_eps"] = b.iota_eps;
  j["sigma_min"] = b.sigma_min;
  if (b.mu_tilde != 0.0) j["mu_tilde"] = b.mu_tilde;
  return j;
}

json sweep_report_to_json(const SweepReport& r) {
  json j;
  j["graphs"] = r.graphs;
  j["pairs_checked"] = r.pairs_checked;
  j["violations"] = r.violations;
  j["sign_histogram"] = json{{"positive", r.sign_positive},
                             {"negative", r.sign_negative},
                             {"zero", r.sign_zero}};
  json v = json::array();
  for (const PairViolation& pv : r.first_violations)
    v.push_back(json{{"graph", pv.graph_index},
                     {"i", pv.i + 1},
                     {"j", pv.j + 1},
                     {"level_actual", pv.level_actual},
                     {"level_bound", pv.level_bound}});
  j["first_violations"] = std::move(v);
  return j;
}

json state_to_json(const ConditioningState& state, const json& model_fingerprint) {
  json j;
  json idx = json::array();
  for (int i : state.indices()) idx.push_back(i + 1);
  j["indices"] = std::move(idx);
  j["factor"] = matrix_to_json(state.factor());
  json c = json::array();
  for (Eigen::Index i = 0; i < state.solved_values().size(); ++i)
    c.push_back(state.solved_values()(i));
  j["solved_values"] = std::move(c);
  j["model"] = model_fingerprint;
  return j;
}

ConditioningState state_from_json(const json& j, json* model_fingerprint_out) {
  std::vector<int> indices;
  for (const json& v : j.at("indices")) indices.push_back(v.get<int>() - 1);
  Eigen::MatrixXd factor(0, 0);
  if (!j.at("factor").empty()) factor = matrix_from_json(j.at("factor"));
  Eigen::VectorXd c(j.at("solved_values").size());
  for (Eigen::Index i = 0; i < c.size(); ++i)
    c(i) = j.at("solved_values").at(static_cast<std::size_t>(i)).get<double>();
  if (model_fingerprint_out) *model_fingerprint_out = j.value("model", json::object());
  return ConditioningState::restore(std::move(indices), std::move(factor), std::move(c));
}

json laws_to_json(const LawCache& laws) {
  json arr = json::array();
  for (const TrackedLaw& t : laws) {
    json u = json::array();
    for (Eigen::Index i = 0; i < t.u.size(); ++i) u.push_back(t.u(i));
    arr.push_back(json{{"target", t.law.target + 1},
                       {"mu", t.law.mu_tilde},
                       {"s2", t.law.sigma_tilde_sq},
                       {"u", std::move(u)}});
  }
  return arr;
}

LawCache laws_from_json(const json& j) {
  LawCache laws;
  for (const json& item : j) {
    TrackedLaw t;
    t.law.target = item.at("target").get<int>() - 1;
    t.law.mu_tilde = item.at("mu").get<double>();
    t.law.sigma_tilde_sq = item.at("s2").get<double>();
    const json& u = item.at("u");
    t.u = Eigen::VectorXd(u.size());
    for (Eigen::Index i = 0; i < t.u.size(); ++i)
      t.u(i) = u.at(static_cast<std::size_t>(i)).get<double>();
    laws.push_back(std::move(t));
  }
  return laws;
}

json make_manifest(const std::string& command, const json& parameters) {
  json j;
  j["command"] = command;
  j["parameters"] = parameters;
  j["tool_version"] = kToolVersion;
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  j["timestamp"] = stamp;
  return j;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io: cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error("io: short write to '" + path + "'");
}

void write_json(const std::string& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

void write_with_manifest(const std::string& path, const std::string& content,
                         const json& manifest) {
  write_file(path, content);
  write_json(path + ".manifest.json", manifest);
}

}  // namespace cascade::io
