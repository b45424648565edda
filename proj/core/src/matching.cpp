#include "coordc/matching.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include "json.hpp"

#include "coordc/errors.hpp"
#include "coordc/rng.hpp"

namespace coordc {

void MatchingInstance::validate() const {
  if (n < 1 || k < 1) throw param_error("matching instance needs n >= 1 and k >= 1");
  if (supplies.size() != k) throw param_error("supplies size must equal k");
  for (int b : supplies)
    if (b < 1) throw param_error("all supplies must be >= 1");
  if (valuations.size() != n * k) throw param_error("valuation matrix must be n x k");
  for (std::uint8_t v : valuations)
    if (v > 1) throw param_error("valuations must be 0/1");
}

std::string MatchingInstance::to_json_string(int indent) const {
  nlohmann::json j;
  j["schema"] = "matching-v1";
  j["n"] = n;
  j["k"] = k;
  j["supplies"] = supplies;
  auto edges = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t g = 0; g < k; ++g)
      if (value(i, g)) edges.push_back({i, g});
  j["edges"] = std::move(edges);
  if (!generator_meta.empty()) j["generator"] = nlohmann::json::parse(generator_meta);
  return j.dump(indent);
}

MatchingInstance MatchingInstance::from_json_string(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw param_error(std::string("bad instance JSON: ") + e.what());
  }
  if (j.value("schema", "") != "matching-v1")
    throw param_error("expected schema \"matching-v1\"");
  MatchingInstance inst;
  try {
    inst.n = j.at("n").get<std::size_t>();
    inst.k = j.at("k").get<std::size_t>();
    inst.supplies = j.at("supplies").get<std::vector<int>>();
    inst.valuations.assign(inst.n * inst.k, 0);
    for (const auto& e : j.at("edges")) {
      std::size_t i = e.at(0).get<std::size_t>();
      std::size_t g = e.at(1).get<std::size_t>();
      if (i >= inst.n || g >= inst.k) throw param_error("edge index out of range");
      inst.valuations[i * inst.k + g] = 1;
    }
    if (j.contains("generator")) inst.generator_meta = j["generator"].dump();
  } catch (const nlohmann::json::exception& e) {
    throw param_error(std::string("bad instance JSON: ") + e.what());
  }
  inst.validate();
  return inst;
}

void MatchingInstance::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw param_error("cannot open " + path.string() + " for writing");
  out << to_json_string() << '\n';
}

MatchingInstance MatchingInstance::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw param_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

CappedWelfare capped_welfare(const Assignment& a, const MatchingInstance& inst) {
  if (a.size() != inst.n) throw param_error("assignment size must equal n");
  CappedWelfare out;
  out.kept.assign(inst.n, -1);
  std::vector<int> taken(inst.k, 0);
  // Ascending player index = the fixed truncation order.
  for (std::size_t i = 0; i < inst.n; ++i) {
    int g = a[i];
    if (g < 0) continue;
    if (static_cast<std::size_t>(g) >= inst.k) throw param_error("assignment good out of range");
    if (!inst.value(i, static_cast<std::size_t>(g))) continue;
    if (taken[g] < inst.supplies[g]) {
      ++taken[g];
      out.kept[i] = g;
      ++out.value;
    }
  }
  return out;
}

namespace {

// Dinic on the unit-capacity player side; fine at the scales this library targets.
class MaxFlow {
 public:
  explicit MaxFlow(int nodes) : head_(nodes, -1), level_(nodes), it_(nodes) {}

  void add_edge(int from, int to, long long cap) {
    edges_.push_back({to, head_[from], cap});
    head_[from] = static_cast<int>(edges_.size()) - 1;
    edges_.push_back({from, head_[to], 0});
    head_[to] = static_cast<int>(edges_.size()) - 1;
  }

  long long run(int s, int t) {
    long long flow = 0;
    while (bfs(s, t)) {
      it_ = head_;
      while (long long pushed = dfs(s, t, std::numeric_limits<long long>::max())) flow += pushed;
    }
    return flow;
  }

  long long edge_flow(int idx) const { return edges_[2 * idx + 1].cap; }

 private:
  struct Edge {
    int to;
    int next;
    long long cap;
  };

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int e = head_[u]; e >= 0; e = edges_[e].next) {
        if (edges_[e].cap > 0 && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[u] + 1;
          q.push(edges_[e].to);
        }
      }
    }
    return level_[t] >= 0;
  }

  long long dfs(int u, int t, long long limit) {
    if (u == t) return limit;
    for (int& e = it_[u]; e >= 0; e = edges_[e].next) {
      Edge& ed = edges_[e];
      if (ed.cap > 0 && level_[ed.to] == level_[u] + 1) {
        long long pushed = dfs(ed.to, t, std::min(limit, ed.cap));
        if (pushed > 0) {
          ed.cap -= pushed;
          edges_[e ^ 1].cap += pushed;
          return pushed;
        }
      }
    }
    return 0;
  }

  std::vector<Edge> edges_;
  std::vector<int> head_;
  std::vector<int> level_;
  std::vector<int> it_;
};

}  // namespace

LpOpt lp_opt(const MatchingInstance& inst) {
  inst.validate();
  const int n = static_cast<int>(inst.n);
  const int k = static_cast<int>(inst.k);
  const int source = 0, sink = n + k + 1;
  MaxFlow mf(n + k + 2);
  for (int i = 0; i < n; ++i) mf.add_edge(source, 1 + i, 1);
  std::vector<int> good_of_arc;  // arcs n.. are the player->good arcs, in order
  std::vector<std::vector<int>> arcs_of(inst.n);
  int arc = n;
  for (int i = 0; i < n; ++i) {
    for (int g = 0; g < k; ++g) {
      if (inst.value(static_cast<std::size_t>(i), static_cast<std::size_t>(g))) {
        mf.add_edge(1 + i, 1 + n + g, 1);
        arcs_of[static_cast<std::size_t>(i)].push_back(arc);
        good_of_arc.push_back(g);
        ++arc;
      }
    }
  }
  for (int g = 0; g < k; ++g) mf.add_edge(1 + n + g, sink, inst.supplies[g]);

  LpOpt out;
  out.value = mf.run(source, sink);
  out.assignment.assign(inst.n, -1);
  for (std::size_t i = 0; i < inst.n; ++i) {
    for (int a : arcs_of[i]) {
      if (mf.edge_flow(a) > 0) {
        out.assignment[i] = good_of_arc[static_cast<std::size_t>(a - n)];
        break;
      }
    }
  }
  return out;
}

Message encode_assignment(const Assignment& a, std::size_t k) {
  const unsigned width = bit_width_u64(k);  // values 0..k
  Message m;
  for (int g : a) {
    if (g < -1 || g >= static_cast<int>(k)) throw param_error("assignment good out of range");
    m.append_field(static_cast<u128>(g + 1), width);
  }
  return m;
}

Assignment decode_assignment(const Message& m, std::size_t n, std::size_t k) {
  const unsigned width = bit_width_u64(k);
  if (m.bit_length() != n * width) throw param_error("assignment message has wrong length");
  BitReader reader(m);
  Assignment a(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    auto v = static_cast<std::uint64_t>(reader.read_field(width));
    if (v > k) throw param_error("assignment field out of range");
    a[i] = static_cast<int>(v) - 1;
  }
  return a;
}

MatchingInstance random_matching_instance(std::size_t n, std::size_t k, int max_supply,
                                          double edge_prob, std::uint64_t seed) {
  if (n < 1 || k < 1 || max_supply < 1) throw param_error("bad generator parameters");
  if (edge_prob < 0.0 || edge_prob > 1.0) throw param_error("edge_prob must be in [0,1]");
  Rng rng(mix64(seed, 0x6d61746368ULL));
  MatchingInstance inst;
  inst.n = n;
  inst.k = k;
  inst.supplies.resize(k);
  for (auto& b : inst.supplies) b = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_supply)));
  inst.valuations.assign(n * k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (std::size_t g = 0; g < k; ++g) {
      if (rng.uniform() < edge_prob) {
        inst.valuations[i * k + g] = 1;
        any = true;
      }
    }
    if (!any) inst.valuations[i * k + rng.below(k)] = 1;  // keep every player relevant
  }
  inst.validate();
  return inst;
}

MatchingInstance planted_matching_instance(std::size_t k, int b, int extra_edges,
                                           std::uint64_t seed) {
  if (k < 1 || b < 1 || extra_edges < 0) throw param_error("bad generator parameters");
  const std::size_t n = k * static_cast<std::size_t>(b);
  Rng rng(mix64(seed, 0x706c616e74ULL));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);

  MatchingInstance inst;
  inst.n = n;
  inst.k = k;
  inst.supplies.assign(k, b);
  inst.valuations.assign(n * k, 0);
  for (std::size_t pos = 0; pos < n; ++pos) {
    std::size_t i = order[pos];
    std::size_t home = pos / static_cast<std::size_t>(b);
    inst.valuations[i * k + home] = 1;
    for (int e = 0; e < extra_edges; ++e) inst.valuations[i * k + rng.below(k)] = 1;
  }
  inst.validate();
  return inst;
}

}  // namespace coordc
