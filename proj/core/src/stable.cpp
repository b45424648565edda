#include "coordc/stable.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "coordc/errors.hpp"
#include "coordc/rng.hpp"

namespace coordc {

namespace {
void check_permutation(const std::vector<int>& v, int lo, int hi, const char* what) {
  if (v.size() != static_cast<std::size_t>(hi - lo + 1)) throw param_error(std::string(what) + ": wrong size");
  std::vector<bool> seen(v.size(), false);
  for (int x : v) {
    if (x < lo || x > hi || seen[static_cast<std::size_t>(x - lo)])
      throw param_error(std::string(what) + ": not a permutation");
    seen[static_cast<std::size_t>(x - lo)] = true;
  }
}
}  // namespace

void StableInstance::validate() const {
  if (n < 1 || k < 1) throw param_error("stable instance needs n >= 1 and k >= 1");
  if (capacities.size() != k) throw param_error("capacities size must equal k");
  for (int c : capacities)
    if (c < 1) throw param_error("capacities must be >= 1");
  if (prefs.size() != n) throw param_error("need one preference list per student");
  for (const auto& p : prefs) check_permutation(p, 0, static_cast<int>(k) - 1, "preferences");
  if (scores.size() != k) throw param_error("need one score table per school");
  for (const auto& s : scores) check_permutation(s, 1, static_cast<int>(n), "scores");
}

std::string StableInstance::to_json_string(int indent) const {
  nlohmann::json j;
  j["schema"] = "stable-v1";
  j["n"] = n;
  j["k"] = k;
  j["capacities"] = capacities;
  j["preferences"] = prefs;
  j["scores"] = scores;
  return j.dump(indent);
}

StableInstance StableInstance::from_json_string(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw param_error(std::string("bad instance JSON: ") + e.what());
  }
  if (j.value("schema", "") != "stable-v1") throw param_error("expected schema \"stable-v1\"");
  StableInstance inst;
  try {
    inst.n = j.at("n").get<std::size_t>();
    inst.k = j.at("k").get<std::size_t>();
    inst.capacities = j.at("capacities").get<std::vector<int>>();
    inst.prefs = j.at("preferences").get<std::vector<std::vector<int>>>();
    inst.scores = j.at("scores").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    throw param_error(std::string("bad instance JSON: ") + e.what());
  }
  inst.validate();
  return inst;
}

void StableInstance::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw param_error("cannot open " + path.string() + " for writing");
  out << to_json_string() << '\n';
}

StableInstance StableInstance::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw param_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

void AdmissionScores::validate(std::size_t n) const {
  for (int a : admit)
    if (a < 1 || a > static_cast<int>(n) + 1) throw param_error("admission score out of range");
}

int decode_enrollment(std::size_t student, const AdmissionScores& scores,
                      const StableInstance& inst) {
  for (int school : inst.prefs[student]) {
    if (inst.scores[static_cast<std::size_t>(school)][student] >=
        scores.admit[static_cast<std::size_t>(school)])
      return school;
  }
  return -1;
}

std::vector<int> enrollment(const AdmissionScores& scores, const StableInstance& inst) {
  std::vector<int> mu(inst.n);
  for (std::size_t i = 0; i < inst.n; ++i) mu[i] = decode_enrollment(i, scores, inst);
  return mu;
}

AdmissionScores stab(const StableInstance& inst) {
  inst.validate();
  AdmissionScores scores;
  scores.admit.assign(inst.k, static_cast<int>(inst.n));

  std::vector<int> filled(inst.k, 0);
  auto refill = [&] {
    std::fill(filled.begin(), filled.end(), 0);
    for (std::size_t i = 0; i < inst.n; ++i) {
      int school = decode_enrollment(i, scores, inst);
      if (school >= 0) ++filled[static_cast<std::size_t>(school)];
    }
  };
  refill();

  for (;;) {
    // Lowest-index under-enrolled school that can still lower its threshold.
    int pick = -1;
    for (std::size_t j = 0; j < inst.k; ++j) {
      if (filled[j] < inst.capacities[j] && scores.admit[j] > 1) {
        pick = static_cast<int>(j);
        break;
      }
    }
    if (pick < 0) break;
    --scores.admit[static_cast<std::size_t>(pick)];
    refill();
  }
  return scores;
}

StabilityReport verify_stability(const std::vector<int>& matching, const StableInstance& inst) {
  inst.validate();
  if (matching.size() != inst.n) throw param_error("matching size must equal n");
  StabilityReport out;

  std::vector<int> filled(inst.k, 0);
  for (std::size_t i = 0; i < inst.n; ++i) {
    int s = matching[i];
    if (s >= static_cast<int>(inst.k)) throw param_error("matched school out of range");
    if (s >= 0) ++filled[static_cast<std::size_t>(s)];
  }
  // Feasibility.
  for (std::size_t j = 0; j < inst.k; ++j)
    if (filled[j] > inst.capacities[j]) out.violations.emplace_back(-1, static_cast<int>(j));

  // rank[i][j] = position of school j in student i's list (smaller = preferred).
  std::vector<std::vector<int>> rank(inst.n, std::vector<int>(inst.k, 0));
  for (std::size_t i = 0; i < inst.n; ++i)
    for (std::size_t pos = 0; pos < inst.k; ++pos)
      rank[i][static_cast<std::size_t>(inst.prefs[i][pos])] = static_cast<int>(pos);

  // weakest[j] = lowest score currently enrolled at j.
  std::vector<int> weakest(inst.k, static_cast<int>(inst.n) + 1);
  for (std::size_t i = 0; i < inst.n; ++i) {
    int s = matching[i];
    if (s >= 0)
      weakest[static_cast<std::size_t>(s)] =
          std::min(weakest[static_cast<std::size_t>(s)], inst.scores[static_cast<std::size_t>(s)][i]);
  }

  for (std::size_t i = 0; i < inst.n; ++i) {
    int cur = matching[i];
    for (std::size_t j = 0; j < inst.k; ++j) {
      if (cur == static_cast<int>(j)) continue;
      // Every student prefers any school to staying unmatched.
      bool prefers = cur < 0 || rank[i][j] < rank[i][static_cast<std::size_t>(cur)];
      if (!prefers) continue;
      if (filled[j] < inst.capacities[j]) {
        out.violations.emplace_back(static_cast<int>(i), static_cast<int>(j));  // empty seat
      } else if (inst.scores[j][i] > weakest[j]) {
        out.violations.emplace_back(static_cast<int>(i), static_cast<int>(j));  // filled seat
      }
    }
  }
  out.stable = out.violations.empty();
  return out;
}

Message encode_scores(const AdmissionScores& scores, std::size_t n) {
  scores.validate(n);
  const unsigned width = bit_width_u64(n + 1);  // values 1..n+1
  Message m;
  for (int a : scores.admit) m.append_field(static_cast<u128>(a), width);
  return m;
}

AdmissionScores decode_scores(const Message& msg, std::size_t n, std::size_t k) {
  const unsigned width = bit_width_u64(n + 1);
  if (msg.bit_length() != k * width) throw param_error("scores message has wrong length");
  BitReader reader(msg);
  AdmissionScores s;
  s.admit.resize(k);
  for (std::size_t j = 0; j < k; ++j)
    s.admit[j] = static_cast<int>(reader.read_field(width));
  s.validate(n);
  return s;
}

StableInstance random_stable_instance(std::size_t n, std::size_t k, int capacity,
                                      std::uint64_t seed) {
  if (n < 1 || k < 1 || capacity < 1) throw param_error("bad generator parameters");
  Rng rng(mix64(seed, 0x737461626cULL));
  StableInstance inst;
  inst.n = n;
  inst.k = k;
  inst.capacities.assign(k, capacity);
  inst.prefs.assign(n, {});
  for (auto& p : inst.prefs) {
    p.resize(k);
    for (std::size_t j = 0; j < k; ++j) p[j] = static_cast<int>(j);
    rng.shuffle(p);
  }
  inst.scores.assign(k, {});
  for (auto& s : inst.scores) {
    s.resize(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<int>(i) + 1;
    rng.shuffle(s);
  }
  inst.validate();
  return inst;
}

}  // namespace coordc
