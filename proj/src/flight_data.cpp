#include "delayprop/flight_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "delayprop/csv.hpp"
#include "delayprop/errors.hpp"

namespace delayprop {

namespace {

enum Col {
  kTail, kAirline, kOrigin, kDest, kSchOut, kActOut, kSchIn, kActIn, kWheelsOff, kWheelsOn,
  kUnimpOut, kUnimpIn, kPlanEnroute, kEdctOff, kNomTo, kWeatherDest, kEnrouteStorm,
  kRunwayConfig, kNumCols
};

const std::vector<std::string> kColumns = {
    "tail_id", "airline", "origin", "dest", "sch_out", "act_out", "sch_in", "act_in",
    "wheels_off", "wheels_on", "unimp_taxi_out", "unimp_taxi_in", "plan_enroute",
    "edct_off", "nom_to", "weather_dest", "enroute_storm", "runway_config"};

struct RowFailure {
  std::string message;
};

std::optional<EpochSeconds> parse_time(const std::string& text, const char* name) {
  if (text.empty()) return std::nullopt;
  EpochSeconds v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw RowFailure{std::string("unparseable timestamp in ") + name + ": '" + text + "'"};
  }
  return v;
}

double parse_minutes(const std::string& text, const char* name) {
  if (text.empty()) throw RowFailure{std::string("missing ") + name};
  double v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw RowFailure{std::string("unparseable number in ") + name + ": '" + text + "'"};
  }
  return v;
}

std::string format_minutes(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_time(const std::optional<EpochSeconds>& t) {
  return t ? std::to_string(*t) : std::string();
}

FlightLegRecord parse_row(const std::vector<std::string>& f, const std::vector<std::size_t>& idx) {
  auto get = [&](Col c) -> const std::string& { return f[idx[c]]; };
  FlightLegRecord r;
  r.tail_id = get(kTail);
  r.airline = get(kAirline);
  r.origin = get(kOrigin);
  r.destination = get(kDest);
  r.sch_gate_out = parse_time(get(kSchOut), "sch_out");
  r.act_gate_out = parse_time(get(kActOut), "act_out");
  r.sch_gate_in = parse_time(get(kSchIn), "sch_in");
  r.act_gate_in = parse_time(get(kActIn), "act_in");
  r.act_wheels_off = parse_time(get(kWheelsOff), "wheels_off");
  r.act_wheels_on = parse_time(get(kWheelsOn), "wheels_on");
  r.unimpeded_taxi_out_min = parse_minutes(get(kUnimpOut), "unimp_taxi_out");
  r.unimpeded_taxi_in_min = parse_minutes(get(kUnimpIn), "unimp_taxi_in");
  r.plan_enroute_min = parse_minutes(get(kPlanEnroute), "plan_enroute");
  const auto edct = parse_time(get(kEdctOff), "edct_off");
  r.edct_off_sec = edct.value_or(-1);
  r.nom_to_min = parse_minutes(get(kNomTo), "nom_to");
  r.weather_dest = get(kWeatherDest);
  r.enroute_storm = get(kEnrouteStorm);
  r.runway_config = get(kRunwayConfig);

  if (r.tail_id.empty()) throw RowFailure{"missing tail_id"};
  if (r.unimpeded_taxi_out_min < 0 || r.unimpeded_taxi_in_min < 0) {
    throw RowFailure{"unimpeded taxi time must be >= 0"};
  }
  if (!(r.plan_enroute_min > 0)) throw RowFailure{"plan_enroute must be > 0"};
  if (r.nom_to_min < 0) throw RowFailure{"nom_to must be >= 0"};
  if (!(r.edct_off_sec == -1 || r.edct_off_sec > 0)) {
    throw RowFailure{"edct_off must be -1 or a positive epoch second"};
  }
  if (r.act_gate_out && r.act_wheels_off && *r.act_wheels_off < *r.act_gate_out) {
    throw RowFailure{"wheels_off precedes act_out"};
  }
  if (r.act_wheels_on && r.act_gate_in && *r.act_gate_in < *r.act_wheels_on) {
    throw RowFailure{"act_in precedes wheels_on"};
  }
  return r;
}

std::optional<double> minutes_between(const std::optional<EpochSeconds>& later,
                                      const std::optional<EpochSeconds>& earlier) {
  if (!later || !earlier) return std::nullopt;
  return static_cast<double>(*later - *earlier) / 60.0;
}

}  // namespace

const std::vector<std::string>& record_columns() { return kColumns; }

ParseResult parse_records(std::istream& in) {
  ParseResult result;
  std::size_t line_no = 0;
  auto header_line = csv::next_line(in, line_no);
  if (!header_line) throw DataError("flight record CSV is empty (no header)");
  std::string header_text = *header_line;
  if (header_text.rfind("\xEF\xBB\xBF", 0) == 0) header_text.erase(0, 3);
  const auto header = csv::split_line(header_text);

  std::vector<std::size_t> idx(kNumCols);
  for (std::size_t c = 0; c < kNumCols; ++c) {
    auto it = std::find(header.begin(), header.end(), kColumns[c]);
    if (it == header.end()) throw DataError("missing header column '" + kColumns[c] + "'");
    idx[c] = static_cast<std::size_t>(it - header.begin());
  }

  while (auto line = csv::next_line(in, line_no)) {
    const auto fields = csv::split_line(*line);
    if (fields.size() != header.size()) {
      result.errors.push_back({line_no, "expected " + std::to_string(header.size()) +
                                            " fields, found " + std::to_string(fields.size())});
      continue;
    }
    try {
      result.records.push_back(parse_row(fields, idx));
    } catch (const RowFailure& e) {
      result.errors.push_back({line_no, e.message});
    }
  }
  return result;
}

void write_records(std::ostream& out, std::span<const FlightLegRecord> records) {
  csv::write_row(out, kColumns);
  for (const auto& r : records) {
    csv::write_row(out, {r.tail_id, r.airline, r.origin, r.destination,
                         format_time(r.sch_gate_out), format_time(r.act_gate_out),
                         format_time(r.sch_gate_in), format_time(r.act_gate_in),
                         format_time(r.act_wheels_off), format_time(r.act_wheels_on),
                         format_minutes(r.unimpeded_taxi_out_min),
                         format_minutes(r.unimpeded_taxi_in_min),
                         format_minutes(r.plan_enroute_min), std::to_string(r.edct_off_sec),
                         format_minutes(r.nom_to_min), r.weather_dest, r.enroute_storm,
                         r.runway_config});
  }
}

DerivedDelays derive_delays(const FlightLegRecord& rec, const FlightLegRecord* prev_leg) {
  DerivedDelays d;
  d.gate_out = minutes_between(rec.act_gate_out, rec.sch_gate_out);
  if (auto t = minutes_between(rec.act_wheels_off, rec.act_gate_out)) {
    d.taxi_out = *t - rec.unimpeded_taxi_out_min;
  }
  if (auto t = minutes_between(rec.act_wheels_on, rec.act_wheels_off)) {
    d.airborne = *t - rec.plan_enroute_min;
  }
  if (auto t = minutes_between(rec.act_gate_in, rec.act_wheels_on)) {
    d.taxi_in = *t - rec.unimpeded_taxi_in_min;
  }
  d.gate_in_dest = minutes_between(rec.act_gate_in, rec.sch_gate_in);
  if (prev_leg != nullptr) {
    d.gate_in_prev = minutes_between(prev_leg->act_gate_in, prev_leg->sch_gate_in);
    const auto actual_turn = minutes_between(rec.act_gate_out, prev_leg->act_gate_in);
    const auto scheduled_turn = minutes_between(rec.sch_gate_out, prev_leg->sch_gate_in);
    if (actual_turn && scheduled_turn) d.turn_around = *actual_turn - *scheduled_turn;
  }
  return d;
}

GdpVars derive_gdp(const FlightLegRecord& rec, const GdpOptions& options) {
  GdpVars g;
  g.gdp = rec.edct_off_sec != -1;
  if (!g.gdp) return g;
  if (!rec.act_gate_out) {
    g.gdp_time = std::numeric_limits<double>::quiet_NaN();
    return g;
  }
  g.gdp_time = (static_cast<double>(rec.edct_off_sec) -
                (static_cast<double>(*rec.act_gate_out) + rec.nom_to_min * 60.0)) /
               60.0;
  g.gdp_gate = g.gdp_time < options.gate_threshold_min;
  return g;
}

std::size_t throughput(std::span<const FlightLegRecord> records, const std::string& airport,
                       Movement kind, int window_min, EpochSeconds at) {
  if (window_min != 15 && window_min != 30) {
    throw std::invalid_argument("throughput window must be 15 or 30 minutes");
  }
  const EpochSeconds begin = at - static_cast<EpochSeconds>(window_min) * 60;
  std::size_t count = 0;
  for (const auto& r : records) {
    const bool here = kind == Movement::departures ? r.origin == airport : r.destination == airport;
    const auto& t = kind == Movement::departures ? r.act_wheels_off : r.act_wheels_on;
    if (here && t && *t >= begin && *t < at) ++count;
  }
  return count;
}

std::vector<std::optional<std::size_t>> link_previous_legs(
    std::span<const FlightLegRecord> records) {
  // tail -> indices of legs with a known gate-in time, sorted by that time
  std::unordered_map<std::string, std::vector<std::size_t>> arrivals;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].act_gate_in) arrivals[records[i].tail_id].push_back(i);
  }
  for (auto& [tail, legs] : arrivals) {
    std::stable_sort(legs.begin(), legs.end(), [&](std::size_t a, std::size_t b) {
      return *records[a].act_gate_in < *records[b].act_gate_in;
    });
  }
  std::vector<std::optional<std::size_t>> prev(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto pushback = r.act_gate_out ? r.act_gate_out : r.sch_gate_out;
    auto it = arrivals.find(r.tail_id);
    if (!pushback || it == arrivals.end()) continue;
    for (auto j = it->second.rbegin(); j != it->second.rend(); ++j) {
      if (*j == i) continue;
      const auto& cand = records[*j];
      if (*cand.act_gate_in > *pushback) continue;
      if (cand.destination == r.origin) prev[i] = *j;
      break;
    }
  }
  return prev;
}

}  // namespace delayprop
