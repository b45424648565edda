// Command-line driver: instance generation, protocol execution, verification,
// and report emission. Exit codes: 0 success, 2 parameter error, 3 precondition
// error, 4 verification failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "coordc/convex.hpp"
#include "coordc/counters.hpp"
#include "coordc/errors.hpp"
#include "coordc/lowerbound.hpp"
#include "coordc/matching.hpp"
#include "coordc/privacy.hpp"
#include "coordc/report.hpp"
#include "coordc/rng.hpp"
#include "coordc/routing.hpp"
#include "coordc/stable.hpp"
#include "coordc/util.hpp"

using namespace coordc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParam = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitVerification = 4;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw param_error("cannot open " + path + " for writing");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw param_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct OutputOptions {
  std::string path;
  std::string format = "csv";
  bool timing = false;
};

void add_output_options(CLI::App* cmd, OutputOptions& out) {
  cmd->add_option("-o,--output", out.path, "output file (default stdout)");
  cmd->add_option("--format", out.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--timing", out.timing,
                "emit measured wall time (off by default so reports replay byte-identically)");
}

void emit(const OutputOptions& opts, std::vector<ReportRow> rows) {
  if (!opts.timing)
    for (auto& r : rows) r.report.wall_time_ms = 0.0;
  if (opts.format == "json") {
    write_text(opts.path, json_rows(rows));
    return;
  }
  std::string text = csv_header();
  for (const auto& r : rows) {
    text += '\n';
    text += csv_row(r);
  }
  write_text(opts.path, text);
}

// Defaults follow the conservative parameterization only while it stays within
// floating-point reach; past n^3 k^3 = 1e6 the fixed 1e-6 takes over.
double default_eta(std::size_t n, std::size_t k) {
  double nk3 = std::pow(static_cast<double>(n), 3) * std::pow(static_cast<double>(k), 3);
  if (100.0 * nk3 <= 1e8) return 1.0 / (100.0 * nk3);
  std::cerr << "note: n^3 k^3 > 1e6; using eta = eps = 1e-6 instead of 1/(100 n^3 k^3)\n";
  return 1e-6;
}

struct MatchOutcome {
  ReportRow row;
  RecResult rec;
  Assignment actions;
};

MatchOutcome run_match(const MatchingInstance& inst, double eta, double eps,
                       std::uint64_t seed, const DualSolveOptions& opts = {}) {
  auto t0 = std::chrono::steady_clock::now();
  MatchOutcome out;
  out.rec = rec_protocol(inst, eta, eps, opts);
  out.actions = independent_rounding(out.rec.assignment, seed);
  auto cw = capped_welfare(out.actions, inst);
  auto opt = lp_opt(inst);
  auto t1 = std::chrono::steady_clock::now();
  out.row.protocol = "match";
  out.row.n = inst.n;
  out.row.k_or_m = inst.k;
  out.row.report = make_report(out.rec.message.bit_length(), static_cast<double>(cw.value),
                               static_cast<double>(opt.value), seed,
                               std::chrono::duration<double, std::milli>(t1 - t0).count());
  return out;
}

struct RoutingOutcome {
  ReportRow row;
  BrSimResult sim;
  double alpha = 0.0;
  std::uint64_t r = 1;
  double eps_eq = 0.0;
};

RoutingOutcome run_routing(const RoutingGame& game, std::optional<double> alpha,
                           std::optional<std::uint64_t> r, std::optional<double> target_eps,
                           std::uint64_t seed) {
  RoutingOutcome out;
  if (target_eps) {
    auto preset = routing_preset(game, *target_eps);
    out.alpha = preset.alpha;
    out.r = preset.r;
  } else if (alpha && r) {
    out.alpha = *alpha;
    out.r = *r;
  } else {
    throw param_error("provide either --target-eps or both --alpha and --r");
  }
  const double lm = game.lipschitz * static_cast<double>(game.m());
  if (!(out.alpha > 2.0 * lm * static_cast<double>(out.r + 1)))
    throw precondition_error("alpha must exceed 2*lambda*m*(r+1) = " +
                             std::to_string(2.0 * lm * static_cast<double>(out.r + 1)));

  auto t0 = std::chrono::steady_clock::now();
  out.sim = br_sim(game, out.alpha, out.r);
  out.eps_eq = out.alpha + lm * static_cast<double>(out.r) + lm;
  auto check = verify_equilibrium(out.sim.flow, game, out.eps_eq);
  auto t1 = std::chrono::steady_clock::now();

  out.row.protocol = "routing";
  out.row.n = game.n();
  out.row.k_or_m = game.m();
  out.row.report =
      make_report(out.sim.message.bit_length(), check.max_regret, std::nullopt, seed,
                  std::chrono::duration<double, std::milli>(t1 - t0).count());
  return out;
}

struct StableOutcome {
  ReportRow row;
  AdmissionScores scores;
  std::vector<int> matching;
  bool stable = false;
};

StableOutcome run_stable(const StableInstance& inst, std::uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  StableOutcome out;
  out.scores = stab(inst);
  Message msg = encode_scores(out.scores, inst.n);
  auto decoded = decode_scores(msg, inst.n, inst.k);
  out.matching = enrollment(decoded, inst);
  out.stable = verify_stability(out.matching, inst).stable;
  auto t1 = std::chrono::steady_clock::now();
  out.row.protocol = "stable";
  out.row.n = inst.n;
  out.row.k_or_m = inst.k;
  out.row.report = make_report(msg.bit_length(), out.stable ? 1.0 : 0.0, std::nullopt, seed,
                               std::chrono::duration<double, std::milli>(t1 - t0).count());
  return out;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"coordination protocols over short broadcast messages"};
  app.require_subcommand(1);

  // ---- gen ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate instance files");
  gen->require_subcommand(1);
  std::string gen_out;

  auto* gen_rang = gen->add_subcommand("rang", "random one-to-one instance");
  std::size_t rho = 1, rang_n = 16;
  std::uint64_t gen_seed = 1;
  gen_rang->add_option("--rho", rho, "decoy multiplier")->required();
  gen_rang->add_option("--n", rang_n, "vertices per side")->required();
  gen_rang->add_option("--seed", gen_seed, "seed");
  gen_rang->add_option("-o,--output", gen_out, "output file")->required();
  gen_rang->callback([&] {
    auto g = rang(rho, rang_n, gen_seed);
    write_text(gen_out, g.to_json_string());
  });

  auto* gen_match = gen->add_subcommand("matching", "random many-to-one instance");
  std::size_t mg_n = 50, mg_k = 5;
  int mg_supply = 4;
  double mg_prob = 0.3;
  gen_match->add_option("--n", mg_n, "players")->required();
  gen_match->add_option("--k", mg_k, "good types")->required();
  gen_match->add_option("--max-supply", mg_supply, "supplies drawn from 1..max");
  gen_match->add_option("--edge-prob", mg_prob, "edge probability");
  gen_match->add_option("--seed", gen_seed, "seed");
  gen_match->add_option("-o,--output", gen_out, "output file")->required();
  gen_match->callback([&] {
    auto inst = random_matching_instance(mg_n, mg_k, mg_supply, mg_prob, gen_seed);
    write_text(gen_out, inst.to_json_string());
  });

  auto* gen_planted = gen->add_subcommand("planted", "instance with a known perfect matching");
  std::size_t pl_k = 10;
  int pl_b = 50, pl_extra = 2;
  gen_planted->add_option("--k", pl_k, "good types")->required();
  gen_planted->add_option("--b", pl_b, "supply per good")->required();
  gen_planted->add_option("--extra", pl_extra, "extra random edges per player");
  gen_planted->add_option("--seed", gen_seed, "seed");
  gen_planted->add_option("-o,--output", gen_out, "output file")->required();
  gen_planted->callback([&] {
    auto inst = planted_matching_instance(pl_k, pl_b, pl_extra, gen_seed);
    write_text(gen_out, inst.to_json_string());
  });

  auto* gen_lift = gen->add_subcommand("lift", "b-copy lift of a one-to-one instance");
  std::string lift_input;
  int lift_b = 2;
  gen_lift->add_option("--input", lift_input, "one-to-one instance file")->required();
  gen_lift->add_option("--b", lift_b, "copies per vertex")->required();
  gen_lift->add_option("-o,--output", gen_out, "output file")->required();
  gen_lift->callback([&] {
    auto g = OneToOneInstance::from_json_string(slurp(lift_input));
    write_text(gen_out, lift_many_to_one(g, lift_b).to_json_string());
  });

  auto* gen_routing = gen->add_subcommand("routing", "routing game");
  std::string topology = "parallel";
  std::size_t rt_players = 50, rt_edges = 2, rt_rows = 3, rt_cols = 4;
  double rt_lipschitz = 0.0;
  gen_routing->add_option("--topology", topology, "parallel or grid")
      ->check(CLI::IsMember({"parallel", "grid"}));
  gen_routing->add_option("--players", rt_players, "players")->required();
  gen_routing->add_option("--edges", rt_edges, "parallel edges");
  gen_routing->add_option("--rows", rt_rows, "grid rows");
  gen_routing->add_option("--cols", rt_cols, "grid cols");
  gen_routing->add_option("--lipschitz", rt_lipschitz, "cost slope bound (default 1/(2n))");
  gen_routing->add_option("--seed", gen_seed, "seed");
  gen_routing->add_option("-o,--output", gen_out, "output file")->required();
  gen_routing->callback([&] {
    double lc = rt_lipschitz > 0.0 ? rt_lipschitz : 1.0 / (2.0 * static_cast<double>(rt_players));
    RoutingGame g = topology == "parallel"
                        ? parallel_edge_game(rt_players, rt_edges, lc, gen_seed)
                        : grid_game(rt_rows, rt_cols, rt_players, lc, gen_seed);
    write_text(gen_out, g.to_json_string());
  });

  auto* gen_cand = gen->add_subcommand("candidates", "price-grid candidate message space");
  std::string cand_instance;
  double cand_eta = 0.1, cand_eps = 0.1;
  std::size_t cand_levels = 3;
  gen_cand->add_option("--instance", cand_instance, "matching-v1 file")->required();
  gen_cand->add_option("--eta", cand_eta, "decode eta");
  gen_cand->add_option("--eps", cand_eps, "decode eps");
  gen_cand->add_option("--levels", cand_levels, "price levels per good (uniform grid on [0,1])");
  gen_cand->add_option("-o,--output", gen_out, "output file")->required();
  gen_cand->callback([&] {
    auto inst = MatchingInstance::load(cand_instance);
    const double alpha = rec_alpha(cand_eta, cand_eps, inst.n, inst.k);
    // The honest broadcast plus every uniform price vector on the level grid.
    std::vector<Message> msgs;
    msgs.push_back(rec_protocol(inst, cand_eta, cand_eps).message);
    for (std::size_t lvl = 0; lvl < cand_levels; ++lvl) {
      DualVector v;
      v.lambda.assign(inst.k,
                      static_cast<double>(lvl) / static_cast<double>(std::max<std::size_t>(1, cand_levels - 1)));
      msgs.push_back(round_dual(v, alpha, inst.k).message);
    }
    auto space = CandidateMessageSpace::make(
        std::move(msgs), "honest broadcast + uniform price grid, " +
                             std::to_string(cand_levels) + " levels");
    write_text(gen_out, space.to_json_string(cand_eta, cand_eps));
  });

  auto* gen_stable = gen->add_subcommand("stable", "school-choice instance");
  std::size_t st_n = 50, st_k = 5;
  int st_cap = 10;
  gen_stable->add_option("--n", st_n, "students")->required();
  gen_stable->add_option("--k", st_k, "schools")->required();
  gen_stable->add_option("--cap", st_cap, "capacity per school")->required();
  gen_stable->add_option("--seed", gen_seed, "seed");
  gen_stable->add_option("-o,--output", gen_out, "output file")->required();
  gen_stable->callback([&] {
    auto inst = random_stable_instance(st_n, st_k, st_cap, gen_seed);
    write_text(gen_out, inst.to_json_string());
  });

  // ---- match-coordinate -----------------------------------------------------
  auto* match = app.add_subcommand("match-coordinate", "price broadcast for matching");
  std::string match_instance;
  double match_eta = 0.0, match_eps = 0.0;
  std::uint64_t match_seed = 1;
  OutputOptions match_out;
  double match_tol = 0.0;
  match->add_option("--instance", match_instance, "matching-v1 file")->required();
  match->add_option("--eta", match_eta, "regularization weight (default rule)");
  match->add_option("--eps", match_eps, "target accuracy (default rule)");
  match->add_option("--tol", match_tol, "dual stopping tolerance");
  match->add_option("--seed", match_seed, "rounding seed");
  add_output_options(match, match_out);
  match->callback([&] {
    auto inst = MatchingInstance::load(match_instance);
    double eta = match_eta > 0.0 ? match_eta : default_eta(inst.n, inst.k);
    double eps = match_eps > 0.0 ? match_eps : eta;
    DualSolveOptions opts;
    // The default regularization sits at the edge of double precision; a
    // demand-scale stopping rule is the finest the dual value can measure.
    if (match_eta <= 0.0) opts.tol = 1e-3;
    if (match_tol > 0.0) opts.tol = match_tol;
    auto outcome = run_match(inst, eta, eps, match_seed, opts);
    emit(match_out, {outcome.row});
  });

  // ---- routing-coordinate ---------------------------------------------------
  auto* routing = app.add_subcommand("routing-coordinate", "transcript broadcast for routing");
  std::string routing_instance;
  double routing_alpha = 0.0, routing_target = 0.0;
  std::uint64_t routing_r = 0, routing_seed = 1;
  OutputOptions routing_out;
  routing->add_option("--instance", routing_instance, "routing-v1 file")->required();
  routing->add_option("--alpha", routing_alpha, "best-response threshold");
  routing->add_option("--r", routing_r, "counter refinement");
  routing->add_option("--target-eps", routing_target, "derive alpha and r from a target");
  routing->add_option("--seed", routing_seed, "seed (recorded only; the run is deterministic)");
  add_output_options(routing, routing_out);
  routing->callback([&] {
    auto game = RoutingGame::load(routing_instance);
    auto outcome = run_routing(
        game, routing_alpha > 0.0 ? std::optional<double>(routing_alpha) : std::nullopt,
        routing_r > 0 ? std::optional<std::uint64_t>(routing_r) : std::nullopt,
        routing_target > 0.0 ? std::optional<double>(routing_target) : std::nullopt,
        routing_seed);
    emit(routing_out, {outcome.row});
  });

  // ---- stable-coordinate ----------------------------------------------------
  auto* stable = app.add_subcommand("stable-coordinate", "threshold broadcast for school choice");
  std::string stable_instance;
  std::uint64_t stable_seed = 1;
  OutputOptions stable_out;
  stable->add_option("--instance", stable_instance, "stable-v1 file")->required();
  stable->add_option("--seed", stable_seed, "seed (recorded only)");
  add_output_options(stable, stable_out);
  stable->callback([&] {
    auto inst = StableInstance::load(stable_instance);
    auto outcome = run_stable(inst, stable_seed);
    if (!outcome.stable) throw verification_error("decoded matching is not stable");
    emit(stable_out, {outcome.row});
  });

  // ---- private-coordinate ---------------------------------------------------
  auto* priv = app.add_subcommand("private-coordinate", "exponential-mechanism selection");
  std::string priv_instance, priv_candidates;
  double priv_eps = 1.0;
  std::uint64_t priv_seed = 1;
  OutputOptions priv_out;
  priv->add_option("--instance", priv_instance, "matching-v1 file")->required();
  priv->add_option("--candidates", priv_candidates, "candidates-v1 file")->required();
  priv->add_option("--privacy-eps", priv_eps, "privacy budget");
  priv->add_option("--seed", priv_seed, "selection/rounding seed");
  add_output_options(priv, priv_out);
  priv->callback([&] {
    auto inst = MatchingInstance::load(priv_instance);
    auto loaded = load_candidates(slurp(priv_candidates));
    auto result = pri_coor(inst, loaded.space, rec_decoder(loaded.eta, loaded.eps), priv_eps,
                           priv_seed);
    ReportRow row{"private", inst.n, inst.k, result.report};
    emit(priv_out, {row});
  });

  // ---- verify ----------------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "re-run a pipeline and check its guarantees");
  std::string verify_kind, verify_instance;
  double verify_eta = 0.0, verify_eps = 0.0, verify_alpha = 0.0, verify_target = 0.0;
  std::uint64_t verify_r = 0, verify_seed = 1;
  verify->add_option("--kind", verify_kind, "matching, routing, stable, or rang")
      ->required()
      ->check(CLI::IsMember({"matching", "routing", "stable", "rang"}));
  verify->add_option("--instance", verify_instance, "instance file")->required();
  verify->add_option("--eta", verify_eta, "matching eta");
  verify->add_option("--eps", verify_eps, "matching eps");
  verify->add_option("--alpha", verify_alpha, "routing alpha");
  verify->add_option("--r", verify_r, "routing refinement");
  verify->add_option("--target-eps", verify_target, "routing target eps");
  verify->add_option("--seed", verify_seed, "seed");
  long long verify_bits = -1;
  verify->add_option("--expect-bits", verify_bits, "fail unless the broadcast uses exactly this many bits");
  auto check_bits = [&verify_bits](std::size_t actual) {
    if (verify_bits >= 0 && actual != static_cast<std::size_t>(verify_bits))
      throw verification_error("message used " + std::to_string(actual) +
                               " bits, expected " + std::to_string(verify_bits));
  };
  verify->callback([&] {
    if (verify_kind == "matching") {
      auto inst = MatchingInstance::load(verify_instance);
      double eta = verify_eta > 0.0 ? verify_eta : default_eta(inst.n, inst.k);
      double eps = verify_eps > 0.0 ? verify_eps : eta;
      DualSolveOptions opts;
      if (verify_eta <= 0.0) opts.tol = 1e-3;
      auto rec = rec_protocol(inst, eta, eps, opts);
      const double alpha = rec_alpha(eta, eps, inst.n, inst.k);
      auto decoded = decode_dual(rec.message, alpha, inst.k);
      for (std::size_t j = 0; j < inst.k; ++j)
        if (decoded.lambda[j] != rec.dual_rounded.lambda[j])
          throw verification_error("price broadcast does not decode to the rounded dual");
      for (std::size_t i = 0; i < inst.n; ++i) {
        if (rec.assignment.row_sum(i) > 1.0 + 1e-9)
          throw verification_error("row sum above one");
        for (std::size_t j = 0; j < inst.k; ++j)
          if (!inst.value(i, j) && rec.assignment.x[i][j] != 0.0)
            throw verification_error("mass on a zero-valued good");
      }
      auto actions = independent_rounding(rec.assignment, verify_seed);
      auto cw = capped_welfare(actions, inst);
      if (cw.value > lp_opt(inst).value)
        throw verification_error("capped welfare exceeded the exact optimum");
      check_bits(rec.message.bit_length());
      std::cout << "matching verification passed\n";
    } else if (verify_kind == "routing") {
      auto game = RoutingGame::load(verify_instance);
      auto outcome = run_routing(
          game, verify_alpha > 0.0 ? std::optional<double>(verify_alpha) : std::nullopt,
          verify_r > 0 ? std::optional<std::uint64_t>(verify_r) : std::nullopt,
          verify_target > 0.0 ? std::optional<double>(verify_target) : std::nullopt,
          verify_seed);
      for (std::size_t i = 0; i < game.n(); ++i)
        if (extract_path(i, outcome.sim.message, game, outcome.alpha, outcome.r) !=
            outcome.sim.flow.paths[i])
          throw verification_error("decoded path differs from the simulated one");
      if (!verify_equilibrium(outcome.sim.flow, game, outcome.eps_eq).ok)
        throw verification_error("final flow misses the equilibrium guarantee");
      check_bits(outcome.sim.message.bit_length());
      std::cout << "routing verification passed\n";
    } else if (verify_kind == "stable") {
      auto inst = StableInstance::load(verify_instance);
      auto outcome = run_stable(inst, verify_seed);
      if (!outcome.stable) throw verification_error("decoded matching is not stable");
      check_bits(outcome.row.report.message_bits);
      std::cout << "stable verification passed\n";
    } else {
      auto g = OneToOneInstance::from_json_string(slurp(verify_instance));
      g.validate();
      long long need = static_cast<long long>((7 * g.n + 7) / 8);
      long long got = max_matching(g).size;
      if (got < need)
        throw verification_error("maximum matching " + std::to_string(got) +
                                 " below the guaranteed " + std::to_string(need));
      std::cout << "rang verification passed\n";
    }
  });

  // ---- sweep ------------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "parameter sweeps to CSV");
  std::string sweep_protocol, sweep_grid, sweep_instance, sweep_out_path;
  std::size_t sweep_seeds = 1, sweep_nperk = 10, sweep_t = 16, sweep_k = 8, sweep_trials = 2000;
  double sweep_eta = 0.1, sweep_eps = 0.1;
  sweep->add_option("--protocol", sweep_protocol, "match, routing, or mindex")
      ->required()
      ->check(CLI::IsMember({"match", "routing", "mindex"}));
  sweep->add_option("--grid", sweep_grid, "e.g. k=2,4,8,16 or eps=0.5,0.7 or budget=0,4,8")
      ->required();
  sweep->add_option("--instance", sweep_instance, "routing game file (routing sweeps)");
  sweep->add_option("--seeds", sweep_seeds, "seeds per grid point");
  sweep->add_option("--n-per-k", sweep_nperk, "players per good type (match sweeps)");
  sweep->add_option("--eta", sweep_eta, "match eta");
  sweep->add_option("--eps", sweep_eps, "match eps");
  sweep->add_option("--t", sweep_t, "index blocks (mindex sweeps)");
  sweep->add_option("--k", sweep_k, "set size (mindex sweeps)");
  sweep->add_option("--trials", sweep_trials, "trials per cell (mindex sweeps)");
  sweep->add_option("-o,--output", sweep_out_path, "output CSV (default stdout)");
  sweep->callback([&] {
    auto eq = sweep_grid.find('=');
    if (eq == std::string::npos) throw param_error("grid must look like name=v1,v2,...");
    std::string param = sweep_grid.substr(0, eq);
    std::vector<double> values;
    {
      std::stringstream ss(sweep_grid.substr(eq + 1));
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) values.push_back(std::stod(item));
    }

    struct Cell {
      double value;
      std::uint64_t seed;
      std::size_t n = 0, k_or_m = 0, bits = 0;
      double objective = 0.0;
      std::string status = "ok";
    };
    std::vector<Cell> cells;
    for (double v : values)
      for (std::uint64_t s = 1; s <= sweep_seeds; ++s) cells.push_back({v, s});

    RoutingGame sweep_game;
    if (sweep_protocol == "routing") {
      if (sweep_instance.empty()) throw param_error("routing sweeps need --instance");
      if (param != "eps") throw param_error("routing sweeps use --grid eps=...");
      sweep_game = RoutingGame::load(sweep_instance);
    } else if (sweep_protocol == "match" && param != "k") {
      throw param_error("match sweeps use --grid k=...");
    } else if (sweep_protocol == "mindex" && param != "budget") {
      throw param_error("mindex sweeps use --grid budget=...");
    }

    parallel_for(cells.size(), [&](std::size_t idx) {
      Cell& cell = cells[idx];
      try {
        if (sweep_protocol == "match") {
          std::size_t k = static_cast<std::size_t>(cell.value);
          std::size_t n = k * sweep_nperk;
          MatchingInstance inst;
          inst.n = n;
          inst.k = k;
          inst.supplies.assign(k, std::max<int>(1, static_cast<int>(n / (2 * k))));
          inst.valuations.assign(n * k, 1);
          auto outc = run_match(inst, sweep_eta, sweep_eps, cell.seed);
          cell.n = n;
          cell.k_or_m = k;
          cell.bits = outc.row.report.message_bits;
          cell.objective = outc.row.report.objective_value;
        } else if (sweep_protocol == "routing") {
          auto outc = run_routing(sweep_game, std::nullopt, std::nullopt, cell.value, cell.seed);
          cell.n = sweep_game.n();
          cell.k_or_m = sweep_game.m();
          cell.bits = outc.row.report.message_bits;
          cell.objective = outc.row.report.objective_value;
        } else {
          std::size_t hits = 0, bits = 0;
          for (std::size_t t = 0; t < sweep_trials; ++t) {
            auto inst = gen_multiple_index(sweep_t, sweep_k,
                                           mix64(cell.seed, static_cast<std::uint64_t>(t)));
            auto outcome = mindex_budget_broadcast(
                inst, static_cast<std::size_t>(cell.value),
                mix64(cell.seed + 1, static_cast<std::uint64_t>(t)));
            bits = outcome.bits;
            if (outcome.success) ++hits;
          }
          cell.n = sweep_t;
          cell.k_or_m = sweep_k;
          cell.bits = bits;
          cell.objective = static_cast<double>(hits) / static_cast<double>(sweep_trials);
        }
      } catch (const std::exception& e) {
        cell.status = std::string("failed: ") + e.what();
      }
    });

    std::string text = "parameter,value,seed,n,k_or_m,message_bits,objective,status";
    for (const auto& c : cells) {
      std::ostringstream line;
      line << '\n'
           << param << ',' << c.value << ',' << c.seed << ',' << c.n << ',' << c.k_or_m << ','
           << c.bits << ',' << c.objective << ',' << c.status;
      text += line.str();
    }
    write_text(sweep_out_path, text);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitParam;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const param_error& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kExitParam;
  } catch (const precondition_error& e) {
    std::cerr << "precondition error: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const convergence_error& e) {
    std::cerr << "precondition error: " << e.what() << '\n';
    return kExitPrecondition;
  } catch (const verification_error& e) {
    std::cerr << "verification failure: " << e.what() << '\n';
    return kExitVerification;
  } catch (const decode_error& e) {
    std::cerr << "decode failure: " << e.what() << '\n';
    return kExitVerification;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
