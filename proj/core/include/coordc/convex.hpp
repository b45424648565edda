#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "coordc/bits.hpp"
#include "coordc/matching.hpp"

namespace coordc {

/// Nonnegative prices for the coupling constraints.
struct DualVector {
  std::vector<double> lambda;

  std::size_t size() const { return lambda.size(); }
  void validate() const;  // all coordinates >= 0
};

/// n rows of k entries in [0, 1]; row sums <= 1.
struct FractionalAssignment {
  std::vector<std::vector<double>> x;

  double row_sum(std::size_t i) const;
};

/// Unique maximizer of sum_j (v_j - lambda_j) x_j - (eta/2)||x||^2 over
/// { x >= 0, sum_j x_j <= 1 }, in closed form: the unconstrained point
/// max(0, v_j - lambda_j)/eta, water-filled with a multiplier mu when its sum
/// exceeds one (sort-and-scan).
std::vector<double> agent_best_response(std::span<const std::uint8_t> valuation_row,
                                        std::span<const double> lambda, double eta);

/// Oracle-shaped linearly separable program. Per-agent feasible sets stay
/// inside the unit ball; constraints map into [0, 1].
struct SeparableProgram {
  std::size_t n = 0;
  std::size_t k = 0;
  std::function<std::vector<double>(std::size_t i, std::span<const double> lambda, double eta)>
      best_response;
  std::function<double(std::size_t i, std::span<const double> x)> objective;
  std::function<double(std::size_t i, std::size_t j, std::span<const double> x)> constraint;
  std::vector<double> bounds;      // b, size k
  double objective_lipschitz = 1.0;  // declared per-agent bound, spot-checked only
};

SeparableProgram matching_program(const MatchingInstance& inst);

/// Sampled spot-checks of the program invariants: oracle outputs stay in the
/// unit ball, constraints stay in [0, 1], v(0) = 0, and |v(x) - v(y)| respects
/// the declared Lipschitz bound on random oracle-point pairs.
void validate_program(const SeparableProgram& p, double eta, std::uint64_t seed,
                      std::size_t samples = 32);

struct DualSolveOptions {
  double tol = 1e-8;
  std::size_t max_iters = 100000;
};

/// Projected gradient descent on the regularized dual with backtracking line
/// search; stops when the projected gradient norm is <= tol. Deterministic.
DualVector solve_regularized_dual(const SeparableProgram& program, double eta,
                                  const DualSolveOptions& opts = {});

struct RoundedDual {
  DualVector rounded;
  Message message;
};

/// Round each coordinate to the nearest multiple of alpha/sqrt(k), ties toward
/// +infinity, and encode: an 8-bit width field w, then k fields of w bits
/// holding the multiples. message_bits = 8 + k*w.
RoundedDual round_dual(const DualVector& lambda, double alpha, std::size_t k);
DualVector decode_dual(const Message& msg, double alpha, std::size_t k);

/// alpha = eta * eps^2 / (4 sqrt(n k)).
double rec_alpha(double eta, double eps, std::size_t n, std::size_t k);

struct RecResult {
  Message message;
  FractionalAssignment assignment;  // decoded at the rounded dual
  DualVector dual;                  // solver output
  DualVector dual_rounded;
};

/// Regularized-dual coordination for the matching program: solve the dual of
/// the eta-regularized problem, round, broadcast; each agent decodes its row
/// with agent_best_response against the rounded prices.
RecResult rec_protocol(const MatchingInstance& inst, double eta, double eps,
                       const DualSolveOptions& opts = {});

/// Decode every agent's row at the given prices (no rounding involved).
FractionalAssignment decode_fractional(const MatchingInstance& inst, const DualVector& lambda,
                                       double eta);

/// Player i picks good j with probability x_ij and nothing with the leftover
/// mass, on its own derived seed stream.
Assignment independent_rounding(const FractionalAssignment& x, std::uint64_t seed);

/// sum_ij v_ij x_ij.
double fractional_welfare(const FractionalAssignment& x, const MatchingInstance& inst);

}  // namespace coordc
