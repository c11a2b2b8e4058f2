#include "delayprop/cases.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include "delayprop/csv.hpp"
#include "delayprop/errors.hpp"

namespace delayprop {

namespace {

const std::vector<std::string> kIngestColumns = {
    "tail_id",      "gate_in_prev",   "turn_around",   "gate_out",       "taxi_out",
    "airborne",     "taxi_in",        "gate_in_dest",  "gdp",            "gdp_time",
    "gdp_gate",     "airline",        "weather_dest",  "enroute_storm",  "runway_config",
    "dep_throughput", "arr_throughput"};

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

// Sorted event times per airport for windowed counting.
class EventIndex {
 public:
  void add(const std::string& airport, EpochSeconds t) { times_[airport].push_back(t); }
  void finish() {
    for (auto& [a, v] : times_) std::sort(v.begin(), v.end());
  }
  std::size_t count(const std::string& airport, EpochSeconds begin, EpochSeconds end) const {
    auto it = times_.find(airport);
    if (it == times_.end()) return 0;
    const auto& v = it->second;
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), end) -
                                    std::lower_bound(v.begin(), v.end(), begin));
  }

 private:
  std::unordered_map<std::string, std::vector<EpochSeconds>> times_;
};

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::optional<std::size_t> CaseTable::column_index(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

std::optional<double> CaseTable::number(std::size_t row, std::size_t col) const {
  const auto& text = rows.at(row).at(col);
  if (text.empty()) return std::nullopt;
  double v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool CaseTable::numeric_column(std::size_t col) const {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r][col].empty() && !number(r, col)) return false;
  }
  return true;
}

CaseTable ingest_records(std::span<const FlightLegRecord> records, const IngestOptions& options) {
  const auto prev = link_previous_legs(records);
  EventIndex departures;
  EventIndex arrivals;
  for (const auto& r : records) {
    if (r.act_wheels_off) departures.add(r.origin, *r.act_wheels_off);
    if (r.act_wheels_on) arrivals.add(r.destination, *r.act_wheels_on);
  }
  departures.finish();
  arrivals.finish();

  CaseTable table;
  table.columns = kIngestColumns;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!options.origin.empty() && r.origin != options.origin) continue;
    if (!options.destination.empty() && r.destination != options.destination) continue;
    const auto d = derive_delays(r, prev[i] ? &records[*prev[i]] : nullptr);
    const auto g = derive_gdp(r, options.gdp);
    std::string dep_tp;
    std::string arr_tp;
    if (r.act_wheels_off) {
      dep_tp = std::to_string(departures.count(r.origin, *r.act_wheels_off - 30 * 60, *r.act_wheels_off));
    }
    if (r.act_gate_out) {
      arr_tp = std::to_string(arrivals.count(r.origin, *r.act_gate_out - 30 * 60, *r.act_gate_out));
    }
    table.timestamps.push_back(r.sch_gate_out.value_or(r.act_gate_out.value_or(0)));
    table.rows.push_back({r.tail_id,
                          opt(d.gate_in_prev),
                          opt(d.turn_around),
                          opt(d.gate_out),
                          opt(d.taxi_out),
                          opt(d.airborne),
                          opt(d.taxi_in),
                          opt(d.gate_in_dest),
                          g.gdp ? "true" : "false",
                          std::isnan(g.gdp_time) ? std::string() : format_number(g.gdp_time),
                          g.gdp_gate ? "true" : "false",
                          r.airline,
                          r.weather_dest,
                          r.enroute_storm,
                          r.runway_config,
                          dep_tp,
                          arr_tp});
  }
  return table;
}

void write_cases(std::ostream& out, const CaseTable& table) {
  std::vector<std::string> header{"timestamp"};
  header.insert(header.end(), table.columns.begin(), table.columns.end());
  csv::write_row(out, header);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::vector<std::string> row{std::to_string(table.timestamps[r])};
    row.insert(row.end(), table.rows[r].begin(), table.rows[r].end());
    csv::write_row(out, row);
  }
}

CaseTable read_cases(std::istream& in) {
  std::size_t line_no = 0;
  auto header_line = csv::next_line(in, line_no);
  if (!header_line) throw DataError("case CSV is empty (no header)");
  auto header = csv::split_line(*header_line);
  if (header.empty() || header.front() != "timestamp") {
    throw DataError("case CSV must start with a 'timestamp' column");
  }
  CaseTable table;
  table.columns.assign(header.begin() + 1, header.end());
  while (auto line = csv::next_line(in, line_no)) {
    auto fields = csv::split_line(*line);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    EpochSeconds ts = 0;
    const auto& t = fields.front();
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), ts);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw DataError("line " + std::to_string(line_no) + ": bad timestamp '" + t + "'");
    }
    table.timestamps.push_back(ts);
    table.rows.emplace_back(std::make_move_iterator(fields.begin() + 1),
                            std::make_move_iterator(fields.end()));
  }
  return table;
}

}  // namespace delayprop
