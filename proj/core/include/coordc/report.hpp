#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace coordc {

/// Per-run accounting: exact broadcast length, achieved objective, and the
/// oracle optimum when one is available.
struct ProtocolReport {
  std::size_t message_bits = 0;
  double objective_value = 0.0;
  std::optional<double> opt_value;
  std::optional<double> approximation_ratio;  // opt / objective, objective > 0
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;
};

ProtocolReport make_report(std::size_t message_bits, double objective,
                           std::optional<double> opt, std::uint64_t seed,
                           double wall_time_ms);

/// True when the deterministic fields agree (wall time is excluded; it is the
/// one field replay cannot reproduce).
bool replay_equal(const ProtocolReport& a, const ProtocolReport& b);

struct ReportRow {
  std::string protocol;
  std::size_t n = 0;
  std::size_t k_or_m = 0;
  ProtocolReport report;
};

std::string csv_header();
std::string csv_row(const ReportRow& row);
std::string json_row(const ReportRow& row);
std::string json_rows(const std::vector<ReportRow>& rows);

}  // namespace coordc
