#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "delayprop/flight_data.hpp"

namespace delayprop {

// Per-flight variable values keyed by column name. Cells hold the raw text
// ("" = missing): numbers for continuous variables, labels for categorical ones.
struct CaseTable {
  std::vector<std::string> columns;
  std::vector<EpochSeconds> timestamps;
  std::vector<std::vector<std::string>> rows;

  std::size_t size() const { return rows.size(); }
  std::optional<std::size_t> column_index(const std::string& name) const;
  // Parsed numeric cell; nullopt when missing or not a finite number.
  std::optional<double> number(std::size_t row, std::size_t col) const;
  // True when every non-missing cell of the column parses as a number.
  bool numeric_column(std::size_t col) const;
};

struct IngestOptions {
  std::string origin;       // keep only legs departing here (empty = all)
  std::string destination;  // and arriving here (empty = all)
  GdpOptions gdp;
};

// Derives the model variables for each (filtered) leg: phase delays, GDP
// variables, categorical context and 30-minute throughputs at the origin.
// The timestamp column is the scheduled gate-out time.
CaseTable ingest_records(std::span<const FlightLegRecord> records, const IngestOptions& options = {});

void write_cases(std::ostream& out, const CaseTable& table);
// Expects a leading "timestamp" column. Throws DataError on malformed input.
CaseTable read_cases(std::istream& in);

std::string format_number(double v);

}  // namespace delayprop
