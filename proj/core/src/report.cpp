#include "coordc/report.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace coordc {

ProtocolReport make_report(std::size_t message_bits, double objective,
                           std::optional<double> opt, std::uint64_t seed,
                           double wall_time_ms) {
  ProtocolReport r;
  r.message_bits = message_bits;
  r.objective_value = objective;
  r.opt_value = opt;
  if (opt.has_value() && objective > 0.0) r.approximation_ratio = *opt / objective;
  r.seed = seed;
  r.wall_time_ms = wall_time_ms;
  return r;
}

bool replay_equal(const ProtocolReport& a, const ProtocolReport& b) {
  return a.message_bits == b.message_bits && a.objective_value == b.objective_value &&
         a.opt_value == b.opt_value && a.approximation_ratio == b.approximation_ratio &&
         a.seed == b.seed;
}

namespace {
std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}
}  // namespace

std::string csv_header() {
  return "protocol,n,k_or_m,seed,message_bits,objective,opt,ratio,wall_time_ms";
}

std::string csv_row(const ReportRow& row) {
  const ProtocolReport& r = row.report;
  std::string out = row.protocol;
  out += ',' + std::to_string(row.n);
  out += ',' + std::to_string(row.k_or_m);
  out += ',' + std::to_string(r.seed);
  out += ',' + std::to_string(r.message_bits);
  out += ',' + fmt(r.objective_value);
  out += ',';
  if (r.opt_value) out += fmt(*r.opt_value);
  out += ',';
  if (r.approximation_ratio) out += fmt(*r.approximation_ratio);
  out += ',' + fmt(r.wall_time_ms);
  return out;
}

namespace {
nlohmann::json row_json(const ReportRow& row) {
  const ProtocolReport& r = row.report;
  nlohmann::json j{{"protocol", row.protocol}, {"n", row.n},
                   {"k_or_m", row.k_or_m},     {"seed", r.seed},
                   {"message_bits", r.message_bits}, {"objective", r.objective_value},
                   {"wall_time_ms", r.wall_time_ms}};
  j["opt"] = r.opt_value ? nlohmann::json(*r.opt_value) : nlohmann::json(nullptr);
  j["ratio"] = r.approximation_ratio ? nlohmann::json(*r.approximation_ratio)
                                     : nlohmann::json(nullptr);
  return j;
}
}  // namespace

std::string json_row(const ReportRow& row) { return row_json(row).dump(); }

std::string json_rows(const std::vector<ReportRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) arr.push_back(row_json(r));
  return arr.dump(2);
}

}  // namespace coordc
