#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coordc/bits.hpp"
#include "coordc/convex.hpp"
#include "coordc/matching.hpp"
#include "coordc/report.hpp"
#include "coordc/rng.hpp"

namespace coordc {

/// Finite, duplicate-free candidate message space plus a note on how it was
/// enumerated.
struct CandidateMessageSpace {
  std::vector<Message> messages;
  std::string provenance;

  static CandidateMessageSpace make(std::vector<Message> msgs, std::string note);

  /// JSON array of "<nbits>:<hex>" strings plus the decode parameters.
  std::string to_json_string(double eta, double eps, int indent = 2) const;
};

struct LoadedCandidates {
  CandidateMessageSpace space;
  double eta = 0.0;
  double eps = 0.0;
};
LoadedCandidates load_candidates(std::string_view text);

struct QualityTable {
  std::vector<double> q;
  double sensitivity = 1.0;  // declared; capped welfare has sensitivity <= 1
};

struct ExpMechResult {
  std::size_t index = 0;
  std::vector<double> probabilities;  // exact, sums to 1
};

/// Probabilities proportional to exp(eps * q / (2 * sensitivity)), computed in
/// log space with max subtraction; sampled by inverse CDF on the given stream.
ExpMechResult exponential_mechanism(const QualityTable& table, double eps, Rng& rng);

/// Decodes a candidate message into every player's fractional row.
using FractionalDecoder =
    std::function<FractionalAssignment(const MatchingInstance&, const Message&)>;

/// The regularized-price decoder with fixed public parameters.
FractionalDecoder rec_decoder(double eta, double eps);

struct QualityOptions {
  /// Exact per-good expectation when n*k <= exact_limit, Monte Carlo above it.
  std::size_t exact_limit = 10000;
  int mc_draws = 1000;
  std::uint64_t mc_seed = 1;
};

struct QualityBuild {
  QualityTable table;
  std::optional<double> mc_std_err;  // largest per-candidate standard error, MC only
};

/// Expected capped welfare of decode-then-round, per candidate message.
QualityBuild build_quality_table(const MatchingInstance& inst,
                                 const CandidateMessageSpace& space,
                                 const FractionalDecoder& decode,
                                 const QualityOptions& opts = {});

/// Exact E[sum_j min(X_j, b_j)] by per-good Poisson-binomial recursion.
double expected_capped_welfare_exact(const MatchingInstance& inst,
                                     const FractionalAssignment& x);
double expected_capped_welfare_mc(const MatchingInstance& inst, const FractionalAssignment& x,
                                  int draws, std::uint64_t seed, double* std_err = nullptr);

struct PriCoorResult {
  Message chosen;
  Assignment actions;
  ProtocolReport report;
  ExpMechResult selection;
  QualityBuild quality;
};

/// Exponential-mechanism privatization of a coordination protocol: score every
/// candidate message by expected decoded welfare, select privately, then let
/// the agents decode the winner.
PriCoorResult pri_coor(const MatchingInstance& inst, const CandidateMessageSpace& space,
                       const FractionalDecoder& decode, double privacy_eps, std::uint64_t seed,
                       const QualityOptions& opts = {});

struct DpCheck {
  double max_log_ratio = 0.0;
};

/// Exact joint-DP audit over declared neighboring pairs: the largest
/// |log(p/p')| across candidates. Throws when a declared pair does not differ
/// in exactly one player's row.
DpCheck verify_dp(const std::vector<MatchingInstance>& family,
                  const std::vector<std::pair<std::size_t, std::size_t>>& neighbor_pairs,
                  const CandidateMessageSpace& space, const FractionalDecoder& decode,
                  double privacy_eps);

}  // namespace coordc
