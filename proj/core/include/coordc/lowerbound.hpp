#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coordc/matching.hpp"

namespace coordc {

/// Random one-to-one instance that hides each left vertex's designated
/// high-value partner among 2*rho decoys: |V| = |W| = n, W splits into W1
/// (the first kappa = n/(8 rho) positions of a random order) and W2; V splits
/// into blocks of size A = n/(16 rho^2); within a block the W1-neighborhoods
/// are disjoint 2*rho-sets; every v gets exactly one W2 neighbor, assigned
/// round-robin.
struct OneToOneInstance {
  std::size_t n = 0;
  std::vector<std::vector<int>> adjacency;  // per v, sorted W indices
  // Generator metadata.
  std::size_t rho = 0;
  std::uint64_t seed = 0;
  std::size_t kappa = 0;       // |W1|
  std::size_t block_size = 0;  // A
  std::vector<int> w1;         // members of W1
  std::vector<int> block_of;   // per v, its block id
  std::vector<int> w2_neighbor;  // per v, the designated W2 vertex

  /// Structural invariants, checked from the data rather than trusted from
  /// construction.
  void validate() const;

  /// Serializes as a matching-v1 document (unit supplies) with a generator block.
  std::string to_json_string(int indent = 2) const;
  static OneToOneInstance from_json_string(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static OneToOneInstance load(const std::filesystem::path& path);

  MatchingInstance to_matching() const;  // n players, n goods, unit supplies
};

/// Requires n divisible by 16*rho^2 and by 8*rho.
OneToOneInstance rang(std::size_t rho, std::size_t n, std::uint64_t seed);

/// Maximum-cardinality bipartite matching, Hopcroft-Karp.
struct BipartiteMatching {
  long long size = 0;
  std::vector<int> match_of_left;  // per left vertex: right index or -1
};
BipartiteMatching max_matching(const std::vector<std::vector<int>>& adjacency,
                               std::size_t num_right);
inline BipartiteMatching max_matching(const OneToOneInstance& g) {
  return max_matching(g.adjacency, g.n);
}

/// b copies of every left vertex; goods keep the right side with supply b.
/// Copy c of vertex v becomes player v*b + c.
MatchingInstance lift_many_to_one(const OneToOneInstance& g, int b);

/// Matching in the lifted instance, as (player, good) pairs.
using LiftedMatching = std::vector<std::pair<int, int>>;
LiftedMatching lifted_matching_from_assignment(const Assignment& a);

/// Per original vertex, sample one of its b copies uniformly and keep that
/// copy's matched edge; duplicate goods keep the lowest-index vertex.
std::vector<std::pair<int, int>> sample_reduce(const LiftedMatching& matching,
                                               const OneToOneInstance& g, int b,
                                               std::uint64_t seed);

/// t disjoint k-sets over a ground set of t*k items, one marked item per set,
/// plus the query index.
struct MultipleIndexInstance {
  std::size_t t = 0;
  std::size_t k = 0;
  std::vector<std::vector<int>> sets;  // t rows of k item ids
  std::vector<int> marked;             // per set, the marked item
  std::size_t query = 0;               // uniform in [0, t)
};
MultipleIndexInstance gen_multiple_index(std::size_t t, std::size_t k, std::uint64_t seed);

/// Baselines for empirical success-vs-bits curves. The budget protocol
/// broadcasts marked positions for the first floor(budget / ceil(log2 k))
/// blocks and guesses elsewhere.
struct MindexOutcome {
  std::size_t bits = 0;
  bool success = false;
};
MindexOutcome mindex_random_guess(const MultipleIndexInstance& inst, std::uint64_t seed);
MindexOutcome mindex_budget_broadcast(const MultipleIndexInstance& inst, std::size_t budget_bits,
                                      std::uint64_t seed);

}  // namespace coordc
