#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "coordc/bits.hpp"

namespace coordc {

/// Bipartite many-to-one matching data: n players, k good types with supplies,
/// and {0,1} valuations. Player i's private slice is row i.
struct MatchingInstance {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<int> supplies;             // size k, each >= 1
  std::vector<std::uint8_t> valuations;  // n*k row-major, entries in {0,1}
  std::string generator_meta;            // optional JSON blob recorded by generators

  std::uint8_t value(std::size_t i, std::size_t j) const { return valuations[i * k + j]; }
  const std::uint8_t* row(std::size_t i) const { return valuations.data() + i * k; }

  void validate() const;

  std::string to_json_string(int indent = 2) const;
  static MatchingInstance from_json_string(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static MatchingInstance load(const std::filesystem::path& path);
};

/// Per player: good index, or -1 for unmatched.
using Assignment = std::vector<int>;

struct CappedWelfare {
  long long value = 0;
  /// Feasible truncation: per good the lowest-index valued players up to the
  /// supply are kept, everyone else is dropped to -1.
  Assignment kept;
};

/// Over-counting-safe welfare: sum_j min(#valued players assigned to j, b_j).
/// Assignments to goods the player does not value contribute nothing.
CappedWelfare capped_welfare(const Assignment& a, const MatchingInstance& inst);

struct LpOpt {
  long long value = 0;
  Assignment assignment;  // one witness optimal integral matching
};

/// Exact optimum by integral max flow (source -> players -> goods -> sink).
LpOpt lp_opt(const MatchingInstance& inst);

/// Trivial full-solution broadcast: n fixed-width fields of ceil(log2(k+1))
/// bits, 0 = unmatched, j = good j (1-based within the field).
Message encode_assignment(const Assignment& a, std::size_t k);
Assignment decode_assignment(const Message& m, std::size_t n, std::size_t k);

MatchingInstance random_matching_instance(std::size_t n, std::size_t k, int max_supply,
                                          double edge_prob, std::uint64_t seed);

/// k goods of supply b each, n = k*b players; every player holds one planted
/// "home" edge arranged so the full matching is feasible (opt = n), plus
/// extra_edges random others.
MatchingInstance planted_matching_instance(std::size_t k, int b, int extra_edges,
                                           std::uint64_t seed);

}  // namespace coordc
