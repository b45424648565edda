#include "doctest.h"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "coordc/convex.hpp"
#include "coordc/errors.hpp"
#include "coordc/lowerbound.hpp"
#include "coordc/matching.hpp"
#include "coordc/rng.hpp"

using namespace coordc;

namespace {

double br_objective(std::span<const std::uint8_t> row, std::span<const double> lambda,
                    double eta, std::span<const double> x) {
  double v = 0.0, norm2 = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    v += (static_cast<double>(row[j]) - lambda[j]) * x[j];
    norm2 += x[j] * x[j];
  }
  return v - 0.5 * eta * norm2;
}

// Random feasible point of the row polytope {x >= 0, sum <= 1}.
std::vector<double> random_feasible(std::size_t k, Rng& rng) {
  std::vector<double> x(k);
  double sum = 0.0;
  for (auto& v : x) {
    v = rng.uniform();
    sum += v;
  }
  double scale = rng.uniform() / std::max(1.0, sum);
  for (auto& v : x) v *= scale;
  return x;
}

}  // namespace

TEST_CASE("best response closed forms") {
  std::vector<std::uint8_t> row{1, 0};
  std::vector<double> zero{0.0, 0.0};
  auto x = agent_best_response(row, zero, 1.0);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(0.0));

  row = {1, 1};
  x = agent_best_response(row, zero, 1.0);  // water-filled at mu = 0.5
  CHECK(x[0] == doctest::Approx(0.5));
  CHECK(x[1] == doctest::Approx(0.5));

  std::vector<double> high{1.0, 2.0};
  x = agent_best_response(row, high, 0.3);
  CHECK(x == std::vector<double>{0.0, 0.0});

  CHECK_THROWS_AS(agent_best_response(row, zero, 0.0), param_error);
  CHECK_THROWS_AS(agent_best_response(row, zero, -1.0), param_error);
}

TEST_CASE("best response is the exact argmax and zero where the row is zero") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t k = 1 + rng.below(8);
    std::vector<std::uint8_t> row(k);
    for (auto& v : row) v = static_cast<std::uint8_t>(rng.below(2));
    std::vector<double> lambda(k);
    for (auto& l : lambda) l = rng.uniform() * 1.5;
    double eta = 0.05 + rng.uniform();

    auto x = agent_best_response(row, lambda, eta);
    double sum = std::accumulate(x.begin(), x.end(), 0.0);
    CHECK(sum <= 1.0 + 1e-12);
    for (std::size_t j = 0; j < k; ++j) {
      CHECK(x[j] >= 0.0);
      if (row[j] == 0) CHECK(x[j] == 0.0);
    }

    double best = br_objective(row, lambda, eta, x);
    for (int probe = 0; probe < 100; ++probe) {
      auto y = random_feasible(k, rng);
      CHECK(br_objective(row, lambda, eta, y) <= best + 1e-12);
    }
  }
}

TEST_CASE("regularized dual solves the hand-derived stationary points") {
  // One player, one good, slack supply: price stays zero.
  MatchingInstance one;
  one.n = 1;
  one.k = 1;
  one.supplies = {1};
  one.valuations = {1};
  auto d = solve_regularized_dual(matching_program(one), 0.5);
  CHECK(d.lambda[0] == doctest::Approx(0.0).epsilon(1e-9));

  // Two players competing for one unit: 2 (1 - lambda)/eta = 1.
  MatchingInstance two;
  two.n = 2;
  two.k = 1;
  two.supplies = {1};
  two.valuations = {1, 1};
  d = solve_regularized_dual(matching_program(two), 0.1);
  CHECK(d.lambda[0] == doctest::Approx(0.95).epsilon(1e-6));
  auto frac = decode_fractional(two, d, 0.1);
  CHECK(frac.x[0][0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(frac.x[1][0] == doctest::Approx(0.5).epsilon(1e-6));

  // Supplies beyond demand: all prices zero.
  MatchingInstance slack;
  slack.n = 3;
  slack.k = 2;
  slack.supplies = {3, 3};
  slack.valuations = {1, 1, 1, 0, 0, 1};
  d = solve_regularized_dual(matching_program(slack), 0.2);
  CHECK(d.lambda[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(d.lambda[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("dual rounding to multiples of alpha/sqrt(k)") {
  DualVector lambda{{0.37}};
  auto r = round_dual(lambda, 0.1, 1);  // unit = 0.1
  CHECK(r.rounded.lambda[0] == doctest::Approx(0.4));

  lambda.lambda = {0.05};
  r = round_dual(lambda, 0.1, 1);  // tie goes toward +infinity
  CHECK(r.rounded.lambda[0] == doctest::Approx(0.1));

  lambda.lambda = {0.0, 0.0, 0.0};
  r = round_dual(lambda, 0.25, 3);
  for (double v : r.rounded.lambda) CHECK(v == 0.0);
  CHECK(r.message.bit_length() == 8);  // zero multiples need zero width

  CHECK_THROWS_AS(round_dual(lambda, 0.0, 3), param_error);
}

TEST_CASE("rounding error stays within alpha and the message decodes exactly") {
  Rng rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t k = 1 + rng.below(12);
    DualVector lambda;
    lambda.lambda.resize(k);
    for (auto& v : lambda.lambda) v = rng.uniform() * 3.0;
    double alpha = 0.01 + rng.uniform();

    auto r = round_dual(lambda, alpha, k);
    double dist2 = 0.0;
    const double unit = alpha / std::sqrt(static_cast<double>(k));
    for (std::size_t j = 0; j < k; ++j) {
      double e = lambda.lambda[j] - r.rounded.lambda[j];
      CHECK(std::abs(e) <= unit / 2.0 + 1e-12);
      dist2 += e * e;
    }
    CHECK(std::sqrt(dist2) <= alpha + 1e-12);

    auto decoded = decode_dual(r.message, alpha, k);
    for (std::size_t j = 0; j < k; ++j) CHECK(decoded.lambda[j] == r.rounded.lambda[j]);

    // 8-bit width header plus k fixed-width fields.
    BitReader reader(r.message);
    unsigned width = static_cast<unsigned>(reader.read_field(8));
    CHECK(r.message.bit_length() == 8 + k * width);
  }
}

TEST_CASE("rec protocol on the two-player contested good") {
  MatchingInstance two;
  two.n = 2;
  two.k = 1;
  two.supplies = {1};
  two.valuations = {1, 1};
  const double eta = 0.1, eps = 0.05;
  auto rec = rec_protocol(two, eta, eps);
  // Decoded rows sit within the dual-primal stability bound of the 0.5 split.
  const double alpha = rec_alpha(eta, eps, 2, 1);
  const double bound = 2.0 * std::sqrt(alpha) * std::pow(2.0, 0.25) / std::sqrt(eta);
  double dev = std::hypot(rec.assignment.x[0][0] - 0.5, rec.assignment.x[1][0] - 0.5);
  CHECK(dev <= bound + 1e-6);
}

TEST_CASE("rec protocol with slack supplies spreads complete rows uniformly") {
  MatchingInstance inst;
  inst.n = 3;
  inst.k = 4;
  inst.supplies = {3, 3, 3, 3};
  inst.valuations.assign(12, 1);
  auto rec = rec_protocol(inst, 0.05, 0.1);  // eta <= 1/k
  for (double v : rec.dual_rounded.lambda) CHECK(v == 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rec.assignment.row_sum(i) == doctest::Approx(1.0));
    for (double v : rec.assignment.x[i]) CHECK(v == doctest::Approx(0.25));
  }
}

TEST_CASE("grid units below 2^-64 of the price range still encode exactly") {
  // The conservative default at n = k = 10 puts the rounding unit near 8e-27,
  // so multiples of a price around one half need ~86-bit fields.
  const std::size_t k = 10;
  const double eta = 1e-8, eps = 1e-8;
  const double alpha = rec_alpha(eta, eps, 10, k);
  DualVector lambda;
  lambda.lambda.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) lambda.lambda[j] = 0.05 * static_cast<double>(j + 1);

  auto r = round_dual(lambda, alpha, k);
  BitReader reader(r.message);
  unsigned width = static_cast<unsigned>(reader.read_field(8));
  CHECK(width > 64);
  CHECK(r.message.bit_length() == 8 + k * width);

  auto decoded = decode_dual(r.message, alpha, k);
  const double unit = alpha / std::sqrt(static_cast<double>(k));
  for (std::size_t j = 0; j < k; ++j) {
    CHECK(decoded.lambda[j] == r.rounded.lambda[j]);  // bit-for-bit
    // A grid finer than the floating-point lattice rounds exactly up to ULPs.
    double ulps = 4.0 * std::numeric_limits<double>::epsilon() * lambda.lambda[j];
    CHECK(std::abs(r.rounded.lambda[j] - lambda.lambda[j]) <= std::max(unit, ulps));
  }
}

TEST_CASE("rec protocol accepts the conservative default parameters at tiny scale") {
  MatchingInstance inst;
  inst.n = 3;
  inst.k = 2;
  inst.supplies = {1, 2};
  inst.valuations = {1, 0, 1, 1, 0, 1};
  const double nk3 = 100.0 * std::pow(3.0, 3) * std::pow(2.0, 3);
  const double eta = 1.0 / nk3;
  auto rec = rec_protocol(inst, eta, eta);
  BitReader reader(rec.message);
  unsigned width = static_cast<unsigned>(reader.read_field(8));
  CHECK(rec.message.bit_length() == 8 + inst.k * width);
}

TEST_CASE("dual-primal stability and regularization loss on random instances") {
  Rng rng(99);
  for (int trial = 0; trial < 8; ++trial) {
    auto inst = random_matching_instance(20 + rng.below(40), 2 + rng.below(5), 4, 0.4,
                                         1000 + static_cast<std::uint64_t>(trial));
    const double eta = trial % 2 == 0 ? 0.05 : 0.1;
    const double eps = 0.1;
    auto rec = rec_protocol(inst, eta, eps);

    const double alpha = rec_alpha(eta, eps, inst.n, inst.k);
    auto at_star = decode_fractional(inst, rec.dual, eta);
    double dist2 = 0.0;
    for (std::size_t i = 0; i < inst.n; ++i)
      for (std::size_t j = 0; j < inst.k; ++j) {
        double d = rec.assignment.x[i][j] - at_star.x[i][j];
        dist2 += d * d;
      }
    const double nk = static_cast<double>(inst.n) * static_cast<double>(inst.k);
    CHECK(std::sqrt(dist2) <= 2.0 * std::sqrt(alpha) * std::pow(nk, 0.25) / std::sqrt(eta) + 1e-9);

    double opt = static_cast<double>(lp_opt(inst).value);
    CHECK(fractional_welfare(at_star, inst) >=
          opt - eta * static_cast<double>(inst.n) / 2.0 - 1e-6);
  }
}

TEST_CASE("program spot-checks pass for matching and catch liars") {
  auto inst = random_matching_instance(15, 4, 3, 0.5, 61);
  auto program = matching_program(inst);
  CHECK_NOTHROW(validate_program(program, 0.1, 1));

  auto liar = program;
  liar.objective_lipschitz = 0.1;  // rows valuing several goods exceed this
  CHECK_THROWS_AS(validate_program(liar, 0.1, 1), param_error);

  auto escaped = program;
  escaped.best_response = [&](std::size_t, std::span<const double>, double) {
    return std::vector<double>(inst.k, 1.0);  // far outside the unit ball
  };
  CHECK_THROWS_AS(validate_program(escaped, 0.1, 1), param_error);
}

TEST_CASE("the dual solver works through caller-supplied oracles") {
  // Scalar agents: v_i(x) = c_i x on [0, 1], one coupling constraint.
  // With c = (0.6, 0.5), eta = 0.5, b = 0.5 the interior stationary price is
  // (c1 + c2 - b*eta) / 2 = 0.425 with x = (0.35, 0.15).
  const std::vector<double> c{0.6, 0.5};
  const double eta = 0.5;
  SeparableProgram p;
  p.n = 2;
  p.k = 1;
  p.bounds = {0.5};
  p.best_response = [&c](std::size_t i, std::span<const double> lambda, double eta_) {
    double x = (c[i] - lambda[0]) / eta_;
    return std::vector<double>{std::clamp(x, 0.0, 1.0)};
  };
  p.objective = [&c](std::size_t i, std::span<const double> x) { return c[i] * x[0]; };
  p.constraint = [](std::size_t, std::size_t, std::span<const double> x) { return x[0]; };

  CHECK_NOTHROW(validate_program(p, eta, 3));
  auto d = solve_regularized_dual(p, eta);
  CHECK(d.lambda[0] == doctest::Approx(0.425).epsilon(1e-6));
  auto x0 = p.best_response(0, d.lambda, eta);
  auto x1 = p.best_response(1, d.lambda, eta);
  CHECK(x0[0] == doctest::Approx(0.35).epsilon(1e-5));
  CHECK(x1[0] == doctest::Approx(0.15).epsilon(1e-5));

  DualSolveOptions strict;
  strict.max_iters = 1;
  strict.tol = 1e-15;
  CHECK_THROWS_AS(solve_regularized_dual(p, eta, strict), convergence_error);
}

TEST_CASE("independent rounding honors row probabilities") {
  FractionalAssignment x;
  x.x = {{1.0, 0.0}};
  auto a = independent_rounding(x, 5);
  CHECK(a[0] == 0);

  x.x = {{0.0, 0.0}};
  a = independent_rounding(x, 5);
  CHECK(a[0] == -1);

  x.x = {{0.5, 0.5}};
  int c0 = 0, c1 = 0;
  for (std::uint64_t s = 0; s < 100000; ++s) {
    a = independent_rounding(x, s);
    if (a[0] == 0) ++c0;
    if (a[0] == 1) ++c1;
  }
  CHECK(c0 + c1 == 100000);
  CHECK(std::abs(c0 / 100000.0 - 0.5) < 0.01);

  x.x = {{0.9, 0.3}};
  CHECK_THROWS_AS(independent_rounding(x, 1), param_error);
}

TEST_CASE("capped welfare truncates over-subscribed goods by player index") {
  MatchingInstance inst;
  inst.n = 2;
  inst.k = 1;
  inst.supplies = {1};
  inst.valuations = {1, 1};
  Assignment both{0, 0};
  auto cw = capped_welfare(both, inst);
  CHECK(cw.value == 1);
  CHECK(cw.kept[0] == 0);
  CHECK(cw.kept[1] == -1);

  Assignment none{-1, -1};
  CHECK(capped_welfare(none, inst).value == 0);
}

TEST_CASE("lp_opt matches hand counts and the capped welfare of its witness") {
  MatchingInstance inst;
  inst.n = 2;
  inst.k = 2;
  inst.supplies = {1, 1};
  inst.valuations = {1, 1, 1, 1};
  auto opt = lp_opt(inst);
  CHECK(opt.value == 2);
  CHECK(capped_welfare(opt.assignment, inst).value == 2);

  inst.n = 3;
  inst.k = 1;
  inst.supplies = {2};
  inst.valuations = {1, 1, 1};
  opt = lp_opt(inst);
  CHECK(opt.value == 2);

  auto g = rang(1, 64, 4242);
  auto unit = lift_many_to_one(g, 1);
  CHECK(lp_opt(unit).value >= 56);
}
