#include "coordc/privacy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "json.hpp"

#include "coordc/errors.hpp"
#include "coordc/util.hpp"

namespace coordc {

CandidateMessageSpace CandidateMessageSpace::make(std::vector<Message> msgs, std::string note) {
  CandidateMessageSpace space;
  space.provenance = std::move(note);
  std::set<std::string> seen;
  for (auto& m : msgs)
    if (seen.insert(m.to_string()).second) space.messages.push_back(std::move(m));
  if (space.messages.empty()) throw param_error("candidate message space is empty");
  return space;
}

std::string CandidateMessageSpace::to_json_string(double eta, double eps, int indent) const {
  nlohmann::json j;
  j["schema"] = "candidates-v1";
  j["eta"] = eta;
  j["eps"] = eps;
  j["provenance"] = provenance;
  auto arr = nlohmann::json::array();
  for (const auto& m : messages) arr.push_back(m.to_string());
  j["messages"] = std::move(arr);
  return j.dump(indent);
}

LoadedCandidates load_candidates(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw param_error(std::string("bad candidates JSON: ") + e.what());
  }
  if (j.value("schema", "") != "candidates-v1")
    throw param_error("expected schema \"candidates-v1\"");
  LoadedCandidates out;
  try {
    out.eta = j.at("eta").get<double>();
    out.eps = j.at("eps").get<double>();
    std::vector<Message> msgs;
    for (const auto& s : j.at("messages")) msgs.push_back(Message::parse(s.get<std::string>()));
    out.space = CandidateMessageSpace::make(std::move(msgs), j.value("provenance", ""));
  } catch (const nlohmann::json::exception& e) {
    throw param_error(std::string("bad candidates JSON: ") + e.what());
  }
  return out;
}

ExpMechResult exponential_mechanism(const QualityTable& table, double eps, Rng& rng) {
  if (table.q.empty()) throw param_error("empty candidate space");
  if (!(eps > 0.0)) throw param_error("eps must be positive");
  if (!(table.sensitivity > 0.0) || table.sensitivity > 1.0 + 1e-12)
    throw param_error("declared sensitivity must lie in (0, 1]");
  for (double q : table.q)
    if (!std::isfinite(q)) throw param_error("qualities must be finite");

  const std::size_t count = table.q.size();
  std::vector<double> logw(count);
  double maxw = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    logw[i] = eps * table.q[i] / (2.0 * table.sensitivity);
    maxw = std::max(maxw, logw[i]);
  }
  double z = 0.0;
  for (double& w : logw) {
    w = std::exp(w - maxw);
    z += w;
  }

  ExpMechResult out;
  out.probabilities.resize(count);
  for (std::size_t i = 0; i < count; ++i) out.probabilities[i] = logw[i] / z;

  double u = rng.uniform();
  double cum = 0.0;
  out.index = count - 1;
  for (std::size_t i = 0; i < count; ++i) {
    cum += out.probabilities[i];
    if (u < cum) {
      out.index = i;
      break;
    }
  }
  return out;
}

FractionalDecoder rec_decoder(double eta, double eps) {
  return [eta, eps](const MatchingInstance& inst, const Message& msg) {
    const double alpha = rec_alpha(eta, eps, inst.n, inst.k);
    DualVector lambda = decode_dual(msg, alpha, inst.k);
    return decode_fractional(inst, lambda, eta);
  };
}

double expected_capped_welfare_exact(const MatchingInstance& inst,
                                     const FractionalAssignment& x) {
  double total = 0.0;
  for (std::size_t j = 0; j < inst.k; ++j) {
    const int cap = inst.supplies[j];
    // dist[s] = P[min(X_j, cap) = s] with the cap state absorbing.
    std::vector<double> dist(static_cast<std::size_t>(cap) + 1, 0.0);
    dist[0] = 1.0;
    for (std::size_t i = 0; i < inst.n; ++i) {
      const double p = inst.value(i, j) ? x.x[i][j] : 0.0;
      if (p <= 0.0) continue;
      for (std::size_t s = dist.size() - 1; s > 0; --s) {
        if (s == dist.size() - 1) {
          dist[s] += dist[s - 1] * p;
        } else {
          dist[s] = dist[s] * (1.0 - p) + dist[s - 1] * p;
        }
      }
      dist[0] *= 1.0 - p;
    }
    for (std::size_t s = 1; s < dist.size(); ++s) total += static_cast<double>(s) * dist[s];
  }
  return total;
}

double expected_capped_welfare_mc(const MatchingInstance& inst, const FractionalAssignment& x,
                                  int draws, std::uint64_t seed, double* std_err) {
  if (draws < 1) throw param_error("draws must be >= 1");
  double sum = 0.0, sumsq = 0.0;
  for (int d = 0; d < draws; ++d) {
    Assignment a = independent_rounding(x, mix64(seed, static_cast<std::uint64_t>(d)));
    double w = static_cast<double>(capped_welfare(a, inst).value);
    sum += w;
    sumsq += w * w;
  }
  double mean = sum / draws;
  if (std_err) {
    double var = std::max(0.0, sumsq / draws - mean * mean);
    *std_err = std::sqrt(var / draws);
  }
  return mean;
}

QualityBuild build_quality_table(const MatchingInstance& inst,
                                 const CandidateMessageSpace& space,
                                 const FractionalDecoder& decode, const QualityOptions& opts) {
  QualityBuild out;
  out.table.q.resize(space.messages.size());
  out.table.sensitivity = 1.0;
  const bool exact = inst.n * inst.k <= opts.exact_limit;
  std::vector<double> errs(space.messages.size(), 0.0);
  parallel_for(space.messages.size(), [&](std::size_t c) {
    FractionalAssignment x = decode(inst, space.messages[c]);
    if (exact) {
      out.table.q[c] = expected_capped_welfare_exact(inst, x);
    } else {
      out.table.q[c] = expected_capped_welfare_mc(inst, x, opts.mc_draws,
                                                  mix64(opts.mc_seed, c), &errs[c]);
    }
  });
  if (!exact) out.mc_std_err = *std::max_element(errs.begin(), errs.end());
  return out;
}

PriCoorResult pri_coor(const MatchingInstance& inst, const CandidateMessageSpace& space,
                       const FractionalDecoder& decode, double privacy_eps, std::uint64_t seed,
                       const QualityOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  PriCoorResult out;
  out.quality = build_quality_table(inst, space, decode, opts);

  Rng coord = coordinator_stream(seed);
  out.selection = exponential_mechanism(out.quality.table, privacy_eps, coord);
  out.chosen = space.messages[out.selection.index];

  FractionalAssignment x = decode(inst, out.chosen);
  out.actions = independent_rounding(x, seed);
  double objective = static_cast<double>(capped_welfare(out.actions, inst).value);
  auto t1 = std::chrono::steady_clock::now();
  out.report = make_report(out.chosen.bit_length(), objective,
                           static_cast<double>(lp_opt(inst).value), seed,
                           std::chrono::duration<double, std::milli>(t1 - t0).count());
  return out;
}

namespace {
void check_neighbors(const MatchingInstance& a, const MatchingInstance& b) {
  if (a.n != b.n || a.k != b.k || a.supplies != b.supplies)
    throw param_error("neighboring instances must share n, k, and supplies");
  std::size_t differing_rows = 0;
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t j = 0; j < a.k; ++j) {
      if (a.value(i, j) != b.value(i, j)) {
        ++differing_rows;
        break;
      }
    }
  }
  // Identical instances are trivially neighbors; two or more changed rows are not.
  if (differing_rows > 1)
    throw param_error("declared neighbors must differ in at most one player's row");
}
}  // namespace

DpCheck verify_dp(const std::vector<MatchingInstance>& family,
                  const std::vector<std::pair<std::size_t, std::size_t>>& neighbor_pairs,
                  const CandidateMessageSpace& space, const FractionalDecoder& decode,
                  double privacy_eps) {
  QualityOptions opts;
  for (const auto& inst : family)
    if (inst.n * inst.k > opts.exact_limit)
      throw precondition_error("verify_dp requires the exact-expectation regime");

  std::vector<std::vector<double>> dists(family.size());
  Rng dummy(0);
  for (std::size_t f = 0; f < family.size(); ++f) {
    QualityBuild q = build_quality_table(family[f], space, decode, opts);
    dists[f] = exponential_mechanism(q.table, privacy_eps, dummy).probabilities;
  }

  DpCheck out;
  for (auto [a, b] : neighbor_pairs) {
    if (a >= family.size() || b >= family.size()) throw param_error("pair index out of range");
    check_neighbors(family[a], family[b]);
    for (std::size_t c = 0; c < space.messages.size(); ++c) {
      double ratio = std::abs(std::log(dists[a][c]) - std::log(dists[b][c]));
      out.max_log_ratio = std::max(out.max_log_ratio, ratio);
    }
  }
  return out;
}

}  // namespace coordc
