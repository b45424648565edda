#include "coordc/lowerbound.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>

#include "json.hpp"

#include "coordc/bits.hpp"
#include "coordc/errors.hpp"
#include "coordc/rng.hpp"

namespace coordc {

void OneToOneInstance::validate() const {
  if (rho < 1) throw param_error("rho must be a positive integer");
  if (n != adjacency.size()) throw param_error("adjacency size must equal n");
  if (kappa != n / (8 * rho) || kappa * 8 * rho != n)
    throw param_error("kappa must equal n / (8 rho) exactly");
  if (block_size != n / (16 * rho * rho) || block_size * 16 * rho * rho != n)
    throw param_error("block size must equal n / (16 rho^2) exactly");
  if (w1.size() != kappa) throw param_error("|W1| must equal kappa");
  if (block_of.size() != n || w2_neighbor.size() != n)
    throw param_error("per-vertex metadata must cover all of V");

  std::vector<bool> in_w1(n, false);
  for (int w : w1) {
    if (w < 0 || static_cast<std::size_t>(w) >= n || in_w1[static_cast<std::size_t>(w)])
      throw param_error("W1 must be a set of distinct W vertices");
    in_w1[static_cast<std::size_t>(w)] = true;
  }

  const std::size_t num_blocks = n / block_size;
  std::vector<std::size_t> block_count(num_blocks, 0);
  std::vector<std::vector<bool>> block_used(num_blocks, std::vector<bool>(n, false));
  for (std::size_t v = 0; v < n; ++v) {
    int blk = block_of[v];
    if (blk < 0 || static_cast<std::size_t>(blk) >= num_blocks)
      throw param_error("block id out of range");
    ++block_count[static_cast<std::size_t>(blk)];

    std::size_t w1_degree = 0;
    std::size_t w2_degree = 0;
    for (int w : adjacency[v]) {
      if (w < 0 || static_cast<std::size_t>(w) >= n) throw param_error("neighbor out of range");
      if (in_w1[static_cast<std::size_t>(w)]) {
        ++w1_degree;
        // Within a block the W1-neighborhoods are disjoint.
        if (block_used[static_cast<std::size_t>(blk)][static_cast<std::size_t>(w)])
          throw param_error("W1 neighborhoods overlap within a block");
        block_used[static_cast<std::size_t>(blk)][static_cast<std::size_t>(w)] = true;
      } else {
        ++w2_degree;
        if (w != w2_neighbor[v]) throw param_error("W2 neighbor differs from designated one");
      }
    }
    if (w1_degree != 2 * rho) throw param_error("every v needs exactly 2 rho W1 neighbors");
    if (w2_degree != 1) throw param_error("every v needs exactly one W2 neighbor");
  }
  for (std::size_t b = 0; b < num_blocks; ++b)
    if (block_count[b] != block_size) throw param_error("blocks must have size A");
}

std::string OneToOneInstance::to_json_string(int indent) const {
  MatchingInstance m = to_matching();
  nlohmann::json j = nlohmann::json::parse(m.to_json_string(0));
  nlohmann::json gen;
  gen["name"] = "rang";
  gen["rho"] = rho;
  gen["seed"] = seed;
  gen["kappa"] = kappa;
  gen["block_size"] = block_size;
  gen["w1"] = w1;
  gen["block_of"] = block_of;
  gen["w2_neighbor"] = w2_neighbor;
  j["generator"] = std::move(gen);
  return j.dump(indent);
}

OneToOneInstance OneToOneInstance::from_json_string(std::string_view text) {
  MatchingInstance m = MatchingInstance::from_json_string(text);
  if (m.generator_meta.empty()) throw param_error("missing generator metadata block");
  nlohmann::json gen = nlohmann::json::parse(m.generator_meta);
  if (gen.value("name", "") != "rang") throw param_error("generator block is not rang");
  if (m.n != m.k) throw param_error("one-to-one instance needs |V| = |W|");
  OneToOneInstance g;
  try {
    g.n = m.n;
    g.rho = gen.at("rho").get<std::size_t>();
    g.seed = gen.at("seed").get<std::uint64_t>();
    g.kappa = gen.at("kappa").get<std::size_t>();
    g.block_size = gen.at("block_size").get<std::size_t>();
    g.w1 = gen.at("w1").get<std::vector<int>>();
    g.block_of = gen.at("block_of").get<std::vector<int>>();
    g.w2_neighbor = gen.at("w2_neighbor").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw param_error(std::string("bad generator block: ") + e.what());
  }
  g.adjacency.assign(g.n, {});
  for (std::size_t v = 0; v < g.n; ++v)
    for (std::size_t w = 0; w < g.n; ++w)
      if (m.value(v, w)) g.adjacency[v].push_back(static_cast<int>(w));
  g.validate();
  return g;
}

void OneToOneInstance::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw param_error("cannot open " + path.string() + " for writing");
  out << to_json_string() << '\n';
}

OneToOneInstance OneToOneInstance::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw param_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

MatchingInstance OneToOneInstance::to_matching() const {
  MatchingInstance m;
  m.n = n;
  m.k = n;
  m.supplies.assign(n, 1);
  m.valuations.assign(n * n, 0);
  for (std::size_t v = 0; v < n; ++v)
    for (int w : adjacency[v]) m.valuations[v * n + static_cast<std::size_t>(w)] = 1;
  return m;
}

OneToOneInstance rang(std::size_t rho, std::size_t n, std::uint64_t seed) {
  if (rho < 1) throw param_error("rho must be a positive integer");
  const std::size_t d1 = 16 * rho * rho;
  const std::size_t d2 = 8 * rho;
  if (n == 0 || n % d1 != 0 || n % d2 != 0)
    throw param_error("n must be divisible by 16*rho^2 (= " + std::to_string(d1) +
                      ") and by 8*rho (= " + std::to_string(d2) + ")");

  Rng rng(mix64(seed, 0x72616e67ULL));
  OneToOneInstance g;
  g.n = n;
  g.rho = rho;
  g.seed = seed;
  g.kappa = n / d2;
  g.block_size = n / d1;

  // Random orders of W and V; the first kappa of the W order form W1.
  std::vector<int> w_order(n), v_order(n);
  for (std::size_t i = 0; i < n; ++i) {
    w_order[i] = static_cast<int>(i);
    v_order[i] = static_cast<int>(i);
  }
  rng.shuffle(w_order);
  rng.shuffle(v_order);

  g.w1.assign(w_order.begin(), w_order.begin() + static_cast<long>(g.kappa));
  g.adjacency.assign(n, {});
  g.block_of.assign(n, 0);
  g.w2_neighbor.assign(n, -1);

  const std::size_t num_blocks = n / g.block_size;
  for (std::size_t blk = 0; blk < num_blocks; ++blk) {
    // Fresh random partition of W1 into 2*rho-sets, one per block member.
    std::vector<int> pool = g.w1;
    rng.shuffle(pool);
    for (std::size_t slot = 0; slot < g.block_size; ++slot) {
      std::size_t pos = blk * g.block_size + slot;
      std::size_t v = static_cast<std::size_t>(v_order[pos]);
      g.block_of[v] = static_cast<int>(blk);
      for (std::size_t t = 0; t < 2 * rho; ++t)
        g.adjacency[v].push_back(pool[slot * 2 * rho + t]);
    }
  }

  // Round-robin W2 edges over the shuffled W order: the i-th vertex of the V
  // order points at W-order position kappa + ((i-1) mod (n - kappa)), 1-based.
  const std::size_t w2_count = n - g.kappa;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t v = static_cast<std::size_t>(v_order[i]);
    int w = w_order[g.kappa + (i % w2_count)];
    g.w2_neighbor[v] = w;
    g.adjacency[v].push_back(w);
  }
  for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
  g.validate();
  return g;
}

BipartiteMatching max_matching(const std::vector<std::vector<int>>& adjacency,
                               std::size_t num_right) {
  const std::size_t nl = adjacency.size();
  const int NIL = -1;
  const int INF = std::numeric_limits<int>::max();
  std::vector<int> match_l(nl, NIL), match_r(num_right, NIL), dist(nl);

  auto bfs = [&]() {
    std::queue<int> q;
    bool found = false;
    for (std::size_t u = 0; u < nl; ++u) {
      if (match_l[u] == NIL) {
        dist[u] = 0;
        q.push(static_cast<int>(u));
      } else {
        dist[u] = INF;
      }
    }
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int w : adjacency[static_cast<std::size_t>(u)]) {
        int u2 = match_r[static_cast<std::size_t>(w)];
        if (u2 == NIL) {
          found = true;
        } else if (dist[static_cast<std::size_t>(u2)] == INF) {
          dist[static_cast<std::size_t>(u2)] = dist[static_cast<std::size_t>(u)] + 1;
          q.push(u2);
        }
      }
    }
    return found;
  };

  std::function<bool(int)> dfs = [&](int u) {
    for (int w : adjacency[static_cast<std::size_t>(u)]) {
      int u2 = match_r[static_cast<std::size_t>(w)];
      if (u2 == NIL ||
          (dist[static_cast<std::size_t>(u2)] == dist[static_cast<std::size_t>(u)] + 1 && dfs(u2))) {
        match_l[static_cast<std::size_t>(u)] = w;
        match_r[static_cast<std::size_t>(w)] = u;
        return true;
      }
    }
    dist[static_cast<std::size_t>(u)] = INF;
    return false;
  };

  BipartiteMatching out;
  while (bfs()) {
    for (std::size_t u = 0; u < nl; ++u)
      if (match_l[u] == NIL && dfs(static_cast<int>(u))) ++out.size;
  }
  out.match_of_left = std::move(match_l);
  return out;
}

MatchingInstance lift_many_to_one(const OneToOneInstance& g, int b) {
  if (b < 1) throw param_error("b must be a positive integer");
  MatchingInstance m;
  m.n = g.n * static_cast<std::size_t>(b);
  m.k = g.n;
  m.supplies.assign(m.k, b);
  m.valuations.assign(m.n * m.k, 0);
  for (std::size_t v = 0; v < g.n; ++v) {
    for (int c = 0; c < b; ++c) {
      std::size_t player = v * static_cast<std::size_t>(b) + static_cast<std::size_t>(c);
      for (int w : g.adjacency[v]) m.valuations[player * m.k + static_cast<std::size_t>(w)] = 1;
    }
  }
  nlohmann::json gen{{"name", "lift"}, {"b", b}, {"base_n", g.n}, {"rho", g.rho}, {"seed", g.seed}};
  m.generator_meta = gen.dump();
  m.validate();
  return m;
}

LiftedMatching lifted_matching_from_assignment(const Assignment& a) {
  LiftedMatching out;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] >= 0) out.emplace_back(static_cast<int>(i), a[i]);
  return out;
}

std::vector<std::pair<int, int>> sample_reduce(const LiftedMatching& matching,
                                               const OneToOneInstance& g, int b,
                                               std::uint64_t seed) {
  if (b < 1) throw param_error("b must be a positive integer");
  const std::size_t n_players = g.n * static_cast<std::size_t>(b);
  std::vector<int> matched_good(n_players, -1);
  for (auto [player, good] : matching) {
    if (player < 0 || static_cast<std::size_t>(player) >= n_players)
      throw param_error("player copy out of range");
    if (good < 0 || static_cast<std::size_t>(good) >= g.n) throw param_error("good out of range");
    if (matched_good[static_cast<std::size_t>(player)] >= 0)
      throw param_error("player copy matched twice");
    matched_good[static_cast<std::size_t>(player)] = good;
  }
  std::vector<int> good_load(g.n, 0);
  for (int w : matched_good)
    if (w >= 0 && ++good_load[static_cast<std::size_t>(w)] > b)
      throw param_error("good oversubscribed beyond supply b");

  Rng rng(mix64(seed, 0x73616d70ULL));
  std::vector<bool> good_taken(g.n, false);
  std::vector<std::pair<int, int>> out;
  for (std::size_t v = 0; v < g.n; ++v) {
    std::size_t copy = rng.below(static_cast<std::uint64_t>(b));
    int good = matched_good[v * static_cast<std::size_t>(b) + copy];
    if (good < 0 || good_taken[static_cast<std::size_t>(good)]) continue;
    good_taken[static_cast<std::size_t>(good)] = true;
    out.emplace_back(static_cast<int>(v), good);
  }
  return out;
}

MultipleIndexInstance gen_multiple_index(std::size_t t, std::size_t k, std::uint64_t seed) {
  if (t < 1 || k < 1) throw param_error("t and k must be >= 1");
  Rng rng(mix64(seed, 0x6d696478ULL));
  std::vector<int> items(t * k);
  for (std::size_t i = 0; i < items.size(); ++i) items[i] = static_cast<int>(i);
  rng.shuffle(items);

  MultipleIndexInstance inst;
  inst.t = t;
  inst.k = k;
  inst.sets.resize(t);
  inst.marked.resize(t);
  for (std::size_t i = 0; i < t; ++i) {
    inst.sets[i].assign(items.begin() + static_cast<long>(i * k),
                        items.begin() + static_cast<long>((i + 1) * k));
    inst.marked[i] = inst.sets[i][rng.below(k)];
  }
  inst.query = rng.below(t);
  return inst;
}

MindexOutcome mindex_random_guess(const MultipleIndexInstance& inst, std::uint64_t seed) {
  Rng rng(mix64(seed, 0x6775657373ULL));
  MindexOutcome out;
  out.bits = 0;
  int guess = inst.sets[inst.query][rng.below(inst.k)];
  out.success = guess == inst.marked[inst.query];
  return out;
}

MindexOutcome mindex_budget_broadcast(const MultipleIndexInstance& inst, std::size_t budget_bits,
                                      std::uint64_t seed) {
  const unsigned field = std::max(1u, bit_width_u64(inst.k - 1));
  const std::size_t covered = std::min(inst.t, budget_bits / field);
  MindexOutcome out;
  out.bits = covered * field;
  if (inst.query < covered) {
    // The message pins the marked element's position within its set.
    out.success = true;
  } else {
    out = mindex_random_guess(inst, seed);
    out.bits = covered * field;
  }
  return out;
}

}  // namespace coordc
