#include "coordc/routing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include "json.hpp"

#include "coordc/errors.hpp"
#include "coordc/rng.hpp"
#include "coordc/util.hpp"

namespace coordc {

double EdgeCost::operator()(double load) const {
  if (kind == Kind::linear) return slope * load + intercept;
  if (values.empty()) throw param_error("table cost has no values");
  if (load <= 0.0) return values.front();
  double last = static_cast<double>(values.size() - 1);
  if (load >= last) return values.back();
  std::size_t lo = static_cast<std::size_t>(load);
  double frac = load - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

namespace {

struct Adjacency {
  // Out-edges per node, ascending edge index (the tie-break order).
  std::vector<std::vector<int>> out;

  explicit Adjacency(const RoutingGame& g) : out(g.num_nodes) {
    for (std::size_t e = 0; e < g.m(); ++e) out[g.edges[e].from].push_back(static_cast<int>(e));
    for (auto& v : out) std::sort(v.begin(), v.end());
  }
};

// Dijkstra with deterministic pop order and strict-improvement relaxation over
// edges in ascending index order.
Path shortest_path(const RoutingGame& g, const Adjacency& adj, std::span<const double> weights,
                   int s, int d) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.num_nodes, inf);
  std::vector<int> parent_edge(g.num_nodes, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[s] = 0.0;
  heap.push({0.0, s});
  while (!heap.empty()) {
    auto [du, u] = heap.top();
    heap.pop();
    if (du > dist[u]) continue;
    if (u == d) break;
    for (int e : adj.out[u]) {
      int v = g.edges[e].to;
      double nd = du + weights[e];
      if (nd < dist[v]) {
        dist[v] = nd;
        parent_edge[v] = e;
        heap.push({nd, v});
      }
    }
  }
  if (dist[d] == inf) throw param_error("destination unreachable");
  Path p;
  for (int v = d; v != s;) {
    int e = parent_edge[v];
    p.push_back(e);
    v = g.edges[e].from;
  }
  std::reverse(p.begin(), p.end());
  return p;
}

}  // namespace

void RoutingGame::validate(std::size_t grid_points) const {
  if (num_nodes == 0) throw param_error("routing game needs at least one node");
  if (lipschitz < 0.0) throw param_error("lipschitz constant must be nonnegative");
  for (const auto& e : edges) {
    if (e.from < 0 || e.to < 0 || static_cast<std::size_t>(e.from) >= num_nodes ||
        static_cast<std::size_t>(e.to) >= num_nodes)
      throw param_error("edge endpoint out of range");
  }
  const double nn = static_cast<double>(n());
  for (const auto& e : edges) {
    double prev = -1.0;
    for (std::size_t s = 0; s < grid_points; ++s) {
      double x0 = nn * static_cast<double>(s) / static_cast<double>(grid_points - 1);
      double c = e.cost(x0);
      if (c < -1e-12 || c > 1.0 + 1e-12) throw param_error("cost outside [0,1] on grid");
      if (c < prev - 1e-12) throw param_error("cost not nondecreasing on grid");
      if (s > 0) {
        double step = nn / static_cast<double>(grid_points - 1);
        if (std::abs(c - prev) > lipschitz * step + 1e-12)
          throw param_error("cost violates declared Lipschitz bound on grid");
      }
      prev = c;
    }
  }
  Adjacency adj(*this);
  std::vector<double> unit(m(), 1.0);
  for (std::size_t i = 0; i < n(); ++i) {
    auto [s, d] = pairs[i];
    if (s < 0 || d < 0 || static_cast<std::size_t>(s) >= num_nodes ||
        static_cast<std::size_t>(d) >= num_nodes)
      throw param_error("pair endpoint out of range");
    shortest_path(*this, adj, unit, s, d);  // throws when disconnected
  }
}

std::string RoutingGame::to_json_string(int indent) const {
  nlohmann::json j;
  j["schema"] = "routing-v1";
  j["nodes"] = num_nodes;
  j["lipschitz"] = lipschitz;
  auto earr = nlohmann::json::array();
  for (const auto& e : edges) {
    nlohmann::json je{{"from", e.from}, {"to", e.to}};
    if (e.cost.kind == EdgeCost::Kind::linear)
      je["cost"] = {{"kind", "linear"}, {"slope", e.cost.slope}, {"intercept", e.cost.intercept}};
    else
      je["cost"] = {{"kind", "table"}, {"values", e.cost.values}};
    earr.push_back(std::move(je));
  }
  j["edges"] = std::move(earr);
  auto parr = nlohmann::json::array();
  for (auto [s, d] : pairs) parr.push_back({s, d});
  j["pairs"] = std::move(parr);
  return j.dump(indent);
}

RoutingGame RoutingGame::from_json_string(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw param_error(std::string("bad game JSON: ") + e.what());
  }
  if (j.value("schema", "") != "routing-v1") throw param_error("expected schema \"routing-v1\"");
  RoutingGame g;
  try {
    g.num_nodes = j.at("nodes").get<std::size_t>();
    g.lipschitz = j.at("lipschitz").get<double>();
    for (const auto& je : j.at("edges")) {
      Edge e;
      e.from = je.at("from").get<int>();
      e.to = je.at("to").get<int>();
      const auto& jc = je.at("cost");
      std::string kind = jc.at("kind").get<std::string>();
      if (kind == "linear") {
        e.cost.kind = EdgeCost::Kind::linear;
        e.cost.slope = jc.at("slope").get<double>();
        e.cost.intercept = jc.at("intercept").get<double>();
      } else if (kind == "table") {
        e.cost.kind = EdgeCost::Kind::table;
        e.cost.values = jc.at("values").get<std::vector<double>>();
      } else {
        throw param_error("unknown cost kind: " + kind);
      }
      g.edges.push_back(std::move(e));
    }
    for (const auto& jp : j.at("pairs"))
      g.pairs.emplace_back(jp.at(0).get<int>(), jp.at(1).get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw param_error(std::string("bad game JSON: ") + e.what());
  }
  g.validate();
  return g;
}

void RoutingGame::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw param_error("cannot open " + path.string() + " for writing");
  out << to_json_string() << '\n';
}

RoutingGame RoutingGame::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw param_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

FlowState flow_from_paths(std::vector<Path> paths, const RoutingGame& g) {
  FlowState f;
  f.loads.assign(g.m(), 0);
  for (const auto& p : paths)
    for (int e : p) ++f.loads[e];
  f.paths = std::move(paths);
  return f;
}

double potential(const FlowState& f, const RoutingGame& g) {
  double psi = 0.0;
  for (std::size_t e = 0; e < g.m(); ++e)
    for (int i = 1; i <= f.loads[e]; ++i) psi += g.edges[e].cost(static_cast<double>(i));
  return psi;
}

std::vector<double> edge_costs_at(const RoutingGame& g, std::span<const double> counts) {
  const double nn = static_cast<double>(g.n());
  std::vector<double> costs(g.m());
  for (std::size_t e = 0; e < g.m(); ++e)
    costs[e] = g.edges[e].cost(std::clamp(counts[e], 0.0, nn));
  return costs;
}

double path_cost(const Path& p, std::span<const double> costs) {
  double c = 0.0;
  for (int e : p) c += costs[e];
  return c;
}

Path best_response_path(std::size_t i, std::span<const double> counts, const RoutingGame& g) {
  Adjacency adj(g);
  std::vector<double> costs = edge_costs_at(g, counts);
  auto [s, d] = g.pairs[i];
  return shortest_path(g, adj, costs, s, d);
}

Path initial_path(std::size_t i, const RoutingGame& g) {
  Adjacency adj(g);
  std::vector<double> unit(g.m(), 1.0);
  auto [s, d] = g.pairs[i];
  return shortest_path(g, adj, unit, s, d);
}

BrSimParams routing_preset(const RoutingGame& g, double target_eps) {
  const double lm = g.lipschitz * static_cast<double>(g.m());
  if (!(target_eps > 2.0 * lm))
    throw precondition_error("target eps must exceed 2*lambda*m = " + std::to_string(2.0 * lm));
  BrSimParams p;
  double real_r = (target_eps - 2.0 * lm) / (6.0 * lm);
  p.r = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(real_r)));
  p.alpha = target_eps - lm * static_cast<double>(p.r) - lm;
  // Integer refinement needs slack: with r = 1 the derived alpha satisfies the
  // simulator's input condition only once eps > 6*lambda*m.
  if (!(p.alpha > 2.0 * lm * static_cast<double>(p.r + 1)))
    throw precondition_error("target eps too tight for an integer refinement; needs eps > " +
                             std::to_string(6.0 * lm));
  return p;
}

namespace {

struct OnlineCounter {
  long long prefix = 0;  // true running sum
  long long count = 0;   // approximate count C
  std::vector<CounterEvent> events;

  void feed(int symbol, std::uint64_t position, long long jump) {
    prefix += symbol;
    long long drift = count - prefix;
    if (drift <= -jump) {
      count += jump;
      events.push_back({position, true});
    } else if (drift >= jump) {
      count -= jump;
      events.push_back({position, false});
    }
    // The count must track the true load within the refinement at every
    // stream position; everything downstream leans on this.
    if (std::llabs(count - prefix) > jump)
      throw verification_error("counter drifted beyond the refinement");
  }
};

struct SimSchedule {
  double l = 0.0;
  std::uint64_t total_rounds = 0;  // T
  std::uint64_t horizon = 0;       // (T+1)*n
};

SimSchedule make_schedule(const RoutingGame& g, double alpha, std::uint64_t r) {
  if (r == 0) throw param_error("refinement must be a positive integer");
  const double lm = g.lipschitz * static_cast<double>(g.m());
  if (!(alpha > 2.0 * lm * static_cast<double>(r + 1)))
    throw precondition_error("alpha must exceed 2*lambda*m*(r+1)");
  SimSchedule s;
  s.l = alpha - 2.0 * lm * static_cast<double>(r) - lm;
  if (!(s.l > 0.0)) throw precondition_error("potential step l must be positive");
  s.total_rounds = static_cast<std::uint64_t>(
      std::ceil(static_cast<double>(g.m()) * static_cast<double>(g.n()) / s.l));
  s.horizon = (s.total_rounds + 1) * g.n();
  return s;
}

}  // namespace

BrSimResult br_sim(const RoutingGame& g, double alpha, std::uint64_t r) {
  g.validate();
  const SimSchedule sched = make_schedule(g, alpha, r);
  const std::size_t n = g.n(), m = g.m();
  const long long jump = static_cast<long long>(r);
  Adjacency adj(g);

  std::vector<OnlineCounter> counters(m);
  std::vector<double> unit(m, 1.0);

  BrSimResult out;
  out.total_rounds = sched.total_rounds;
  out.horizon = sched.horizon;
  out.min_potential_drop = std::numeric_limits<double>::infinity();

  // Initial formation: player i occupies stream position i (1-based).
  FlowState flow;
  flow.loads.assign(m, 0);
  flow.paths.resize(n);
  std::uint64_t position = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto [s, d] = g.pairs[i];
    flow.paths[i] = shortest_path(g, adj, unit, s, d);
    ++position;
    std::vector<std::uint8_t> on(m, 0);
    for (int e : flow.paths[i]) on[e] = 1;
    for (std::size_t e = 0; e < m; ++e) {
      if (on[e]) ++flow.loads[e];
      counters[e].feed(on[e] ? 1 : 0, position, jump);
    }
  }

  std::vector<double> counts(m);
  const auto counter_counts = [&] {
    for (std::size_t e = 0; e < m; ++e) counts[e] = static_cast<double>(counters[e].count);
  };

  std::uint64_t halt = sched.total_rounds;
  for (std::uint64_t t = 1; t <= sched.total_rounds; ++t) {
    // Round-start check: every player alpha-best-responding to the counts?
    counter_counts();
    std::vector<double> costs = edge_costs_at(g, counts);
    bool all_br = true;
    for (std::size_t i = 0; i < n && all_br; ++i) {
      auto [s, d] = g.pairs[i];
      Path best = shortest_path(g, adj, costs, s, d);
      if (path_cost(flow.paths[i], costs) > path_cost(best, costs) + alpha) all_br = false;
    }
    if (all_br) {
      halt = t - 1;
      break;
    }

    // Player i occupies stream position n*t + i and sees the counter state
    // one position earlier.
    for (std::size_t i = 0; i < n; ++i) {
      counter_counts();
      std::vector<double> cur_costs = edge_costs_at(g, counts);
      auto [s, d] = g.pairs[i];
      Path best = shortest_path(g, adj, cur_costs, s, d);
      double cur = path_cost(flow.paths[i], cur_costs);
      double opt = path_cost(best, cur_costs);
      ++position;

      if (cur > opt + alpha) {
        // True potential drop equals the player's own cost improvement.
        std::vector<double> true_costs(m);
        for (std::size_t e = 0; e < m; ++e)
          true_costs[e] = g.edges[e].cost(static_cast<double>(flow.loads[e]));
        double before = path_cost(flow.paths[i], true_costs);

        std::vector<std::int8_t> delta(m, 0);
        for (int e : flow.paths[i]) --delta[e];
        for (int e : best) ++delta[e];
        for (std::size_t e = 0; e < m; ++e) flow.loads[e] += delta[e];

        for (std::size_t e = 0; e < m; ++e)
          true_costs[e] = g.edges[e].cost(static_cast<double>(flow.loads[e]));
        double after = path_cost(best, true_costs);
        double drop = before - after;
        out.min_potential_drop = std::min(out.min_potential_drop, drop);
        if (drop < sched.l - 1e-9)
          throw verification_error("potential drop below the guaranteed step");

        flow.paths[i] = std::move(best);
        ++out.deviations;
        for (std::size_t e = 0; e < m; ++e) counters[e].feed(delta[e], position, jump);
      } else {
        for (std::size_t e = 0; e < m; ++e) counters[e].feed(0, position, jump);
      }
    }
  }
  out.halt_round = halt;

  const unsigned halt_bits = bit_width_u64(sched.total_rounds);
  out.message.append_field(halt, halt_bits);
  for (std::size_t e = 0; e < m; ++e) {
    CounterTranscript t;
    t.refinement = r;
    t.horizon = sched.horizon;
    t.updates = std::move(counters[e].events);
    append_transcript(out.message, t);
  }
  out.flow = std::move(flow);
  return out;
}

Path extract_path(std::size_t i, const Message& msg, const RoutingGame& g, double alpha,
                  std::uint64_t r) {
  if (i >= g.n()) throw param_error("player index out of range");
  const SimSchedule sched = make_schedule(g, alpha, r);
  const std::size_t n = g.n(), m = g.m();

  BitReader reader(msg);
  const unsigned halt_bits = bit_width_u64(sched.total_rounds);
  const std::uint64_t halt = static_cast<std::uint64_t>(reader.read_field(halt_bits));
  if (halt > sched.total_rounds) throw param_error("halt round exceeds horizon");
  std::vector<CountIndex> index;
  index.reserve(m);
  for (std::size_t e = 0; e < m; ++e)
    index.emplace_back(read_transcript(reader, r, sched.horizon));
  if (reader.remaining() != 0) throw param_error("trailing bits in routing message");

  Adjacency adj(g);
  std::vector<double> unit(m, 1.0);
  auto [s, d] = g.pairs[i];
  Path path = shortest_path(g, adj, unit, s, d);

  std::vector<double> counts(m);
  for (std::uint64_t t = 1; t <= halt; ++t) {
    const std::uint64_t pos = n * t + i;  // state just before this player's slot
    for (std::size_t e = 0; e < m; ++e) counts[e] = static_cast<double>(index[e].at(pos));
    std::vector<double> costs = edge_costs_at(g, counts);
    Path best = shortest_path(g, adj, costs, s, d);
    if (path_cost(path, costs) > path_cost(best, costs) + alpha) path = std::move(best);
  }
  return path;
}

EquilibriumCheck verify_equilibrium(const FlowState& f, const RoutingGame& g, double eps) {
  const std::size_t n = g.n(), m = g.m();
  std::vector<double> regret(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    Adjacency adj(g);
    std::vector<double> weights(m);
    std::vector<std::uint8_t> on(m, 0);
    for (int e : f.paths[i]) on[e] = 1;
    double cur = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      double base = static_cast<double>(f.loads[e]);
      weights[e] = g.edges[e].cost(base - (on[e] ? 1.0 : 0.0) + 1.0);
      if (on[e]) cur += g.edges[e].cost(base);
    }
    auto [s, d] = g.pairs[i];
    Path best = shortest_path(g, adj, weights, s, d);
    regret[i] = cur - path_cost(best, weights);
  });
  EquilibriumCheck out;
  for (double r : regret) out.max_regret = std::max(out.max_regret, r);
  out.ok = out.max_regret <= eps + 1e-9;
  return out;
}

RoutingGame parallel_edge_game(std::size_t n_players, std::size_t n_edges, double slope,
                               std::uint64_t seed) {
  if (n_players < 1 || n_edges < 1) throw param_error("bad generator parameters");
  if (slope * static_cast<double>(n_players) > 1.0 + 1e-12)
    throw param_error("slope * n must stay within the unit cost range");
  (void)seed;
  RoutingGame g;
  g.num_nodes = 2;
  g.lipschitz = slope;
  for (std::size_t e = 0; e < n_edges; ++e) {
    RoutingGame::Edge edge;
    edge.from = 0;
    edge.to = 1;
    edge.cost.kind = EdgeCost::Kind::linear;
    edge.cost.slope = slope;
    edge.cost.intercept = 0.0;
    g.edges.push_back(edge);
  }
  g.pairs.assign(n_players, {0, 1});
  return g;
}

RoutingGame grid_game(std::size_t rows, std::size_t cols, std::size_t n_players,
                      double lipschitz, std::uint64_t seed) {
  if (rows < 2 || cols < 2 || n_players < 1) throw param_error("bad generator parameters");
  Rng rng(mix64(seed, 0x67726964ULL));
  RoutingGame g;
  g.num_nodes = rows * cols;
  g.lipschitz = lipschitz;
  const double max_intercept = std::max(0.0, 1.0 - lipschitz * static_cast<double>(n_players));
  auto node = [cols](std::size_t rr, std::size_t cc) { return static_cast<int>(rr * cols + cc); };
  for (std::size_t rr = 0; rr < rows; ++rr) {
    for (std::size_t cc = 0; cc < cols; ++cc) {
      auto add = [&](int from, int to) {
        RoutingGame::Edge e;
        e.from = from;
        e.to = to;
        e.cost.kind = EdgeCost::Kind::linear;
        e.cost.slope = lipschitz * (0.25 + 0.75 * rng.uniform());
        e.cost.intercept = max_intercept * rng.uniform() * 0.5;
        g.edges.push_back(e);
      };
      if (cc + 1 < cols) add(node(rr, cc), node(rr, cc + 1));
      if (rr + 1 < rows) add(node(rr, cc), node(rr + 1, cc));
    }
  }
  for (std::size_t i = 0; i < n_players; ++i) {
    // Source strictly up-left of the destination keeps every pair connected.
    std::size_t r1 = rng.below(rows - 1);
    std::size_t c1 = rng.below(cols - 1);
    std::size_t r2 = r1 + 1 + rng.below(rows - r1 - 1);
    std::size_t c2 = c1 + 1 + rng.below(cols - c1 - 1);
    g.pairs.emplace_back(node(r1, c1), node(r2, c2));
  }
  return g;
}

}  // namespace coordc
