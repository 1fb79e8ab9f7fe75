#pragma once

#include <iosfwd>
#include <string>

#include "bridgesmc/score_sa.hpp"

namespace bridgesmc {

/// Raw observation rows "time,y1[,y2]" with strictly increasing times.
struct ObservationSet {
  std::vector<double> times;
  std::vector<std::vector<double>> values;
};

/// Parses CSV rows "time,y1[,y2]" (optional header, '.' decimal separator).
/// Throws std::runtime_error naming the offending row.
ObservationSet load_observations(std::istream&);
ObservationSet load_observations_file(const std::string& path);

/// Round-trip-exact writer ("%.17g" fields).
void save_observations(std::ostream&, const ObservationSet&);
void save_observations_file(const std::string& path, const ObservationSet&);

std::string format_double(double v);

void write_records_csv(std::ostream&, const std::vector<EstimateRecord>&);
std::vector<EstimateRecord> read_records_csv(std::istream&);
std::vector<EstimateRecord> read_records_csv_file(const std::string& path);

}  // namespace bridgesmc
