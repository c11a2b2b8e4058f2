#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "delayprop/flight_data.hpp"
#include "delayprop/model_io.hpp"
#include "delayprop/network.hpp"

namespace delayprop {

// How sampled bins become continuous delays and flight-leg records.
//
// Interior bins emit a whole number of seconds uniformly within the bin; an
// open tail emits edge +/- an exponential draw with mean tail_mean (default:
// the scheme's tail_halfwidth). A floor truncates a node's values from below
// (e.g. taxi-out delay cannot be shorter than minus the unimpeded time).
struct EmissionSpec {
  EpochSeconds base_time = 1088640000;  // 2004-07-01T00:00:00Z
  EpochSeconds spacing_sec = 1800;      // between consecutive cases
  std::string origin = "ORD";
  std::string destination = "ATL";
  std::string previous_origin = "DEN";
  double unimpeded_taxi_out_min = 20.0;
  double unimpeded_taxi_in_min = 8.0;
  double plan_enroute_min = 89.0;
  double previous_block_min = 150.0;
  double nom_to_min = 20.0;
  double scheduled_turn_min = 90.0;
  double gdp_time_lo_min = 1.0;   // GDP holding when gdp = true
  double gdp_time_hi_min = 30.0;
  std::map<std::string, double> tail_mean;
  std::map<std::string, double> floor;
  std::map<std::string, std::string> defaults;  // record fields without a node
};

// A fully specified network whose tables are the true CPTs, plus emission.
// The node priors describe the model a learner starts from.
struct GroundTruth {
  Network network;
  EmissionSpec emission;
};

GroundTruth ground_truth_from_json(const json& j);
json to_json(const GroundTruth& gt);

// Directory holding shipped scenario files: $DELAYPROP_SCENARIO_DIR if set,
// else the source tree's scenarios/ directory.
std::filesystem::path scenario_dir();
// The 12-node ORD->ATL phase-chain scenario (scenarios/default_scenario.json).
GroundTruth default_scenario();

struct SyntheticData {
  // Two legs per case: the inbound leg into the origin, then the outbound leg.
  std::vector<FlightLegRecord> records;
  std::vector<Assignment> truth;
  std::vector<EpochSeconds> timestamps;    // outbound scheduled gate-out
  std::vector<std::vector<double>> emitted;  // minutes per node; NaN for categorical
};

// Nodes named gate_in_prev, turn_around, gate_out, taxi_out, airborne,
// taxi_in, gate_in_dest, gdp, airline, weather_dest, enroute_storm and
// runway_config are written into the records; any other node is latent.
// Throws ConfigError if the truth puts mass on bins the emission cannot
// realize (gate_out must lie in gate_in_prev + turn_around).
SyntheticData generate(const GroundTruth& gt, std::size_t n, std::uint64_t seed);

}  // namespace delayprop
