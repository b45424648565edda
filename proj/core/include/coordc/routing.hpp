#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coordc/bits.hpp"
#include "coordc/counters.hpp"

namespace coordc {

/// Per-edge cost descriptor. Costs map [0, n] into [0, 1], are nondecreasing,
/// and carry a declared Lipschitz constant (validated by sampling only).
struct EdgeCost {
  enum class Kind { linear, table };
  Kind kind = Kind::linear;
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> values;  // table kind: values at integer loads 0..n

  double operator()(double load) const;
};

struct RoutingGame {
  std::size_t num_nodes = 0;
  struct Edge {
    int from = 0;
    int to = 0;
    EdgeCost cost;
  };
  std::vector<Edge> edges;                 // index order doubles as the tie-break order
  std::vector<std::pair<int, int>> pairs;  // (s_i, d_i), player i's private slice
  double lipschitz = 0.0;                  // lambda_c, declared

  std::size_t n() const { return pairs.size(); }
  std::size_t m() const { return edges.size(); }

  /// Connectivity of every pair plus sampled monotonicity / Lipschitz / range
  /// checks of each cost function over a grid.
  void validate(std::size_t grid_points = 17) const;

  std::string to_json_string(int indent = 2) const;
  static RoutingGame from_json_string(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static RoutingGame load(const std::filesystem::path& path);
};

/// A path is a list of edge indices; loads are the per-edge player counts.
using Path = std::vector<int>;

struct FlowState {
  std::vector<Path> paths;
  std::vector<int> loads;
};

FlowState flow_from_paths(std::vector<Path> paths, const RoutingGame& g);

/// Psi(f) = sum_e sum_{i=1}^{f_e} c_e(i).
double potential(const FlowState& f, const RoutingGame& g);

/// Edge costs evaluated at counts clamped into the cost domain [0, n].
std::vector<double> edge_costs_at(const RoutingGame& g, std::span<const double> counts);

double path_cost(const Path& p, std::span<const double> costs);

/// Minimum-cost s_i -> d_i path under cₑ(clamp(countsₑ, 0, n)); ties broken by
/// ordered edge relaxation, which realizes a lexicographic order on edge-index
/// sequences. Throws if d_i is unreachable.
Path best_response_path(std::size_t i, std::span<const double> counts, const RoutingGame& g);

/// Fewest-edge initial path with the same deterministic tie-break.
Path initial_path(std::size_t i, const RoutingGame& g);

struct BrSimParams {
  double alpha = 0.0;
  std::uint64_t r = 1;
};

/// Parameters realizing a target equilibrium quality eps > 2 lambda m:
/// r = max(1, floor((eps - 2 lambda m) / (6 lambda m))), alpha = eps - lambda m r - lambda m.
BrSimParams routing_preset(const RoutingGame& g, double target_eps);

struct BrSimResult {
  Message message;          // halt-round header + per-edge transcripts
  FlowState flow;           // simulator's final flow (not part of the message)
  std::uint64_t halt_round = 0;
  std::uint64_t total_rounds = 0;  // T
  std::uint64_t horizon = 0;       // (T+1) * n stream positions
  std::size_t deviations = 0;
  double min_potential_drop = 0.0;  // smallest drop over logged deviations
};

/// Best-response dynamics against approximate counters, compressed into one
/// broadcast. Requires alpha > 2 lambda m (r + 1).
BrSimResult br_sim(const RoutingGame& g, double alpha, std::uint64_t r);

/// Player-side replay: reproduces the simulator's final path for player i from
/// the message and the player's own pair, bit for bit.
Path extract_path(std::size_t i, const Message& msg, const RoutingGame& g, double alpha,
                  std::uint64_t r);

struct EquilibriumCheck {
  bool ok = false;
  double max_regret = 0.0;
};

/// True deviation test: for each player, the best single-path deviation cost
/// against the real loads. eps-equilibrium iff every regret <= eps.
EquilibriumCheck verify_equilibrium(const FlowState& f, const RoutingGame& g, double eps);

RoutingGame parallel_edge_game(std::size_t n_players, std::size_t n_edges, double slope,
                               std::uint64_t seed);
RoutingGame grid_game(std::size_t rows, std::size_t cols, std::size_t n_players,
                      double lipschitz, std::uint64_t seed);

}  // namespace coordc
