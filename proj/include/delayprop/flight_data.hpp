#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace delayprop {

using EpochSeconds = std::int64_t;

// One aircraft leg in ASPM style. Event times are optional: an empty CSV
// field leaves the time absent and every delay that depends on it absent too.
struct FlightLegRecord {
  std::string tail_id;
  std::string airline;
  std::string origin;
  std::string destination;
  std::optional<EpochSeconds> sch_gate_out;
  std::optional<EpochSeconds> act_gate_out;
  std::optional<EpochSeconds> sch_gate_in;
  std::optional<EpochSeconds> act_gate_in;
  std::optional<EpochSeconds> act_wheels_off;
  std::optional<EpochSeconds> act_wheels_on;
  double unimpeded_taxi_out_min = 0.0;
  double unimpeded_taxi_in_min = 0.0;
  double plan_enroute_min = 0.0;
  EpochSeconds edct_off_sec = -1;  // -1 when no ground delay program applies
  double nom_to_min = 0.0;
  std::string weather_dest;
  std::string enroute_storm;
  std::string runway_config;
};

// Header names, in the order written by write_records.
const std::vector<std::string>& record_columns();

struct RowError {
  std::size_t line;  // 1-based, header is line 1
  std::string message;
};

struct ParseResult {
  std::vector<FlightLegRecord> records;
  std::vector<RowError> errors;
};

// Throws DataError when the header lacks a required column. Row-level
// problems are collected in ParseResult::errors and the row is skipped.
ParseResult parse_records(std::istream& in);

void write_records(std::ostream& out, std::span<const FlightLegRecord> records);

// Phase delays in minutes; negative values mean early. Absent when an input
// time (or, for gate_in_prev/turn_around, the previous leg) is missing.
struct DerivedDelays {
  std::optional<double> gate_in_prev;
  std::optional<double> turn_around;
  std::optional<double> gate_out;
  std::optional<double> taxi_out;
  std::optional<double> airborne;
  std::optional<double> taxi_in;
  std::optional<double> gate_in_dest;
};

// prev_leg is the same tail's inbound leg into rec.origin. Turn-around delay
// is actual minus scheduled turn time, so positive means a slower turn.
DerivedDelays derive_delays(const FlightLegRecord& rec, const FlightLegRecord* prev_leg = nullptr);

struct GdpVars {
  bool gdp = false;
  double gdp_time = 0.0;  // minutes; NaN if GDP applies but act_gate_out is missing
  bool gdp_gate = false;
};

struct GdpOptions {
  // gdp_gate = gdp && gdp_time < gate_threshold_min
  double gate_threshold_min = 0.0;
};

GdpVars derive_gdp(const FlightLegRecord& rec, const GdpOptions& options = {});

enum class Movement { departures, arrivals };

// Number of wheels-off (departures from airport) or wheels-on (arrivals at
// airport) events in the half-open window [at - window_min*60, at).
std::size_t throughput(std::span<const FlightLegRecord> records, const std::string& airport,
                       Movement kind, int window_min, EpochSeconds at);

// For each record, the index of the same tail's most recent leg arriving at
// the record's origin no later than its pushback, if any.
std::vector<std::optional<std::size_t>> link_previous_legs(
    std::span<const FlightLegRecord> records);

}  // namespace delayprop
