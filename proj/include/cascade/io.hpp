#pragma once

#include <string>

#include <json.hpp>

#include "cascade/conditional.hpp"
#include "cascade/covariance.hpp"
#include "cascade/graph.hpp"
#include "cascade/montecarlo.hpp"
#include "cascade/risk.hpp"

// Serialization boundary. Agent indices are 1-based in every file format and
// 0-based inside the library; the converters here are the only place that
// translation happens.
namespace cascade::io {

inline constexpr const char* kToolVersion = "1.0.0";

// %.17g rendering so doubles round-trip through text.
std::string format_double(double v);

std::string topology_name(Topology t);
Topology topology_from_name(const std::string& name);

nlohmann::json graph_spec_to_json(const GraphSpec& spec);
GraphSpec graph_spec_from_json(const nlohmann::json& j);

nlohmann::json spectrum_to_json(const Spectrum& s);
nlohmann::json stability_to_json(const StabilityReport& r, double tau);

std::string matrix_to_csv(const Eigen::MatrixXd& m);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows);

nlohmann::json read_json_file(const std::string& path);

// Failure observations: {"failures":[{"agent":int,"value":real},...]},
// agents 1-based on disk.
nlohmann::json observation_to_json(const FailureObservation& obs);
FailureObservation observation_from_json(const nlohmann::json& j, int n);

std::string branch_name(RiskBranch b);
nlohmann::json level_to_json(const RiskLevel& lvl);  // "inf" for the infinite branch

nlohmann::json profile_to_json(const RiskProfile& profile);
std::string profile_to_csv(const RiskProfile& profile);

nlohmann::json bounds_to_json(const CovarianceBounds& b);
nlohmann::json best_bound_to_json(const BestAchievableBound& b);
nlohmann::json sweep_report_to_json(const SweepReport& r);

// Incremental conditioning state round-trip for the update workflow.
nlohmann::json state_to_json(const ConditioningState& state,
                             const nlohmann::json& model_fingerprint);
ConditioningState state_from_json(const nlohmann::json& j,
                                  nlohmann::json* model_fingerprint_out = nullptr);

// Tracked laws ride along in the state file so a later update stays O(m) per
// target instead of re-deriving every cross column.
nlohmann::json laws_to_json(const LawCache& laws);
LawCache laws_from_json(const nlohmann::json& j);

// Manifest sidecar: <name>.manifest.json with command, resolved parameters,
// tool version and a timestamp. The timestamp lives only here so data files
// stay byte-identical under a fixed seed.
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& parameters);
void write_file(const std::string& path, const std::string& content);
void write_json(const std::string& path, const nlohmann::json& j);
void write_with_manifest(const std::string& path, const std::string& content,
                         const nlohmann::json& manifest);

}  // namespace cascade::io
