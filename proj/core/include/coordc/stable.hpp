#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "coordc/bits.hpp"

namespace coordc {

/// Many-to-one school choice: k schools with capacities, n students, strict
/// student preferences over all schools, and per-school scores that rank the
/// students (a bijection onto 1..n per school). Student i's private slice is
/// its preference list plus its own score at every school.
struct StableInstance {
  std::size_t n = 0;  // students
  std::size_t k = 0;  // schools
  std::vector<int> capacities;              // size k, each >= 1
  std::vector<std::vector<int>> prefs;      // n rows, permutation of 0..k-1, best first
  std::vector<std::vector<int>> scores;     // k rows, scores[j][i] in 1..n, bijection per school

  void validate() const;

  std::string to_json_string(int indent = 2) const;
  static StableInstance from_json_string(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static StableInstance load(const std::filesystem::path& path);
};

/// Broadcast thresholds: admit[j] in 1..n+1; n+1 is the "admits nobody yet"
/// sentinel, never produced by stab but covered by the message width.
struct AdmissionScores {
  std::vector<int> admit;

  void validate(std::size_t n) const;
};

/// Student-side decode: the most preferred school whose threshold the student
/// meets, or -1 when it qualifies nowhere. Uses only the student's own slice.
int decode_enrollment(std::size_t student, const AdmissionScores& scores,
                      const StableInstance& inst);

/// Threshold-descending deferred acceptance: repeatedly pick the lowest-index
/// under-enrolled school with admit > 1, lower its threshold by one, and
/// re-derive every student's tentative enrollment. Always terminates; the
/// induced matching is stable.
AdmissionScores stab(const StableInstance& inst);

/// Per-student school index (or -1), derived from thresholds.
std::vector<int> enrollment(const AdmissionScores& scores, const StableInstance& inst);

struct StabilityReport {
  bool stable = false;
  /// (student, school) pairs violating feasibility or forming blocking pairs.
  std::vector<std::pair<int, int>> violations;
};

StabilityReport verify_stability(const std::vector<int>& matching, const StableInstance& inst);

/// Message format: k fields of ceil(log2(n+2)) bits.
Message encode_scores(const AdmissionScores& scores, std::size_t n);
AdmissionScores decode_scores(const Message& msg, std::size_t n, std::size_t k);

StableInstance random_stable_instance(std::size_t n, std::size_t k, int capacity,
                                      std::uint64_t seed);

}  // namespace coordc
