#include "coordc/convex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coordc/errors.hpp"
#include "coordc/rng.hpp"

namespace coordc {

void DualVector::validate() const {
  for (double v : lambda)
    if (!(v >= 0.0)) throw param_error("dual coordinates must be nonnegative");
}

double FractionalAssignment::row_sum(std::size_t i) const {
  return std::accumulate(x[i].begin(), x[i].end(), 0.0);
}

std::vector<double> agent_best_response(std::span<const std::uint8_t> valuation_row,
                                        std::span<const double> lambda, double eta) {
  if (!(eta > 0.0)) throw param_error("eta must be positive");
  if (valuation_row.size() != lambda.size()) throw param_error("row/price size mismatch");
  const std::size_t k = valuation_row.size();

  std::vector<double> gain(k);
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (lambda[j] < 0.0) throw param_error("negative price");
    gain[j] = static_cast<double>(valuation_row[j]) - lambda[j];
    if (gain[j] > 0.0) total += gain[j] / eta;
  }

  std::vector<double> x(k, 0.0);
  if (total <= 1.0) {
    for (std::size_t j = 0; j < k; ++j)
      if (gain[j] > 0.0) x[j] = gain[j] / eta;
    return x;
  }

  // Water-fill: find mu >= 0 with sum_j max(0, gain_j - mu) = eta.
  std::vector<double> sorted(gain);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double mu = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    prefix += sorted[t];
    double candidate = (prefix - eta) / static_cast<double>(t + 1);
    if (t + 1 == k || sorted[t + 1] <= candidate) {
      mu = candidate;
      break;
    }
  }
  for (std::size_t j = 0; j < k; ++j)
    if (gain[j] > mu) x[j] = (gain[j] - mu) / eta;
  return x;
}

SeparableProgram matching_program(const MatchingInstance& inst) {
  inst.validate();
  SeparableProgram p;
  p.n = inst.n;
  p.k = inst.k;
  p.bounds.assign(inst.supplies.begin(), inst.supplies.end());
  p.best_response = [&inst](std::size_t i, std::span<const double> lambda, double eta) {
    return agent_best_response({inst.row(i), inst.k}, lambda, eta);
  };
  p.objective = [&inst](std::size_t i, std::span<const double> x) {
    double v = 0.0;
    for (std::size_t j = 0; j < inst.k; ++j) v += static_cast<double>(inst.value(i, j)) * x[j];
    return v;
  };
  p.constraint = [](std::size_t, std::size_t j, std::span<const double> x) { return x[j]; };
  // A row valuing several goods has objective gradient norm up to sqrt(k).
  p.objective_lipschitz = std::sqrt(static_cast<double>(inst.k));
  return p;
}

void validate_program(const SeparableProgram& p, double eta, std::uint64_t seed,
                      std::size_t samples) {
  if (!(eta > 0.0)) throw param_error("eta must be positive");
  Rng rng(mix64(seed, 0x70726f67ULL));
  const std::vector<double> origin(p.k, 0.0);
  std::vector<double> lambda(p.k);
  for (std::size_t s = 0; s < samples; ++s) {
    std::size_t i = rng.below(std::max<std::size_t>(p.n, 1));
    for (auto& l : lambda) l = rng.uniform() * 2.0;
    std::vector<double> x = p.best_response(i, lambda, eta);
    double norm2 = 0.0;
    for (double v : x) norm2 += v * v;
    if (norm2 > 1.0 + 1e-9) throw param_error("oracle output leaves the unit ball");
    for (std::size_t j = 0; j < p.k; ++j) {
      double c = p.constraint(i, j, x);
      if (c < -1e-12 || c > 1.0 + 1e-12) throw param_error("constraint outside [0, 1]");
    }
    std::vector<double> zero(x.size(), 0.0);
    if (std::abs(p.objective(i, zero)) > 1e-12) throw param_error("objective nonzero at 0");

    for (auto& l : lambda) l = rng.uniform() * 2.0;
    std::vector<double> y = p.best_response(i, lambda, eta);
    double dist2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dist2 += (x[j] - y[j]) * (x[j] - y[j]);
    double gap = std::abs(p.objective(i, x) - p.objective(i, y));
    if (gap > p.objective_lipschitz * std::sqrt(dist2) + 1e-9)
      throw param_error("objective violates the declared Lipschitz bound");
  }
}

namespace {

struct DualEval {
  double value = 0.0;
  std::vector<double> gradient;
};

// g(lambda) = sum_j lambda_j b_j + sum_i max_x [ v_i(x) - eta/2 ||x||^2 - sum_j lambda_j c_j(x) ]
// grad_j    = b_j - sum_i c_j(x_i(lambda))
DualEval eval_dual(const SeparableProgram& p, std::span<const double> lambda, double eta) {
  DualEval out;
  out.gradient.assign(p.k, 0.0);
  for (std::size_t j = 0; j < p.k; ++j) {
    out.value += lambda[j] * p.bounds[j];
    out.gradient[j] = p.bounds[j];
  }
  for (std::size_t i = 0; i < p.n; ++i) {
    std::vector<double> x = p.best_response(i, lambda, eta);
    double norm2 = 0.0;
    for (double v : x) norm2 += v * v;
    double inner = p.objective(i, x) - 0.5 * eta * norm2;
    for (std::size_t j = 0; j < p.k; ++j) {
      double c = p.constraint(i, j, x);
      inner -= lambda[j] * c;
      out.gradient[j] -= c;
    }
    out.value += inner;
  }
  return out;
}

double projected_gradient_norm(std::span<const double> lambda, std::span<const double> grad) {
  double s = 0.0;
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    double g = (lambda[j] > 0.0) ? grad[j] : std::min(grad[j], 0.0);
    s += g * g;
  }
  return std::sqrt(s);
}

}  // namespace

DualVector solve_regularized_dual(const SeparableProgram& p, double eta,
                                  const DualSolveOptions& opts) {
  if (!(eta > 0.0)) throw param_error("eta must be positive");
  if (p.bounds.size() != p.k) throw param_error("bounds size must equal k");

  std::vector<double> lambda(p.k, 0.0);
  DualEval cur = eval_dual(p, lambda, eta);
  double step = eta / std::max<std::size_t>(p.n, 1);  // 1/L for the separable dual
  double pg = projected_gradient_norm(lambda, cur.gradient);

  std::vector<double> prev_lambda, prev_grad;
  for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
    if (pg <= opts.tol) {
      DualVector out;
      out.lambda = std::move(lambda);
      return out;
    }

    // Barzilai-Borwein trial step, backtracked against the proximal descent test.
    if (!prev_lambda.empty()) {
      double sy = 0.0, ss = 0.0;
      for (std::size_t j = 0; j < p.k; ++j) {
        double s = lambda[j] - prev_lambda[j];
        double y = cur.gradient[j] - prev_grad[j];
        sy += s * y;
        ss += s * s;
      }
      if (sy > 0.0 && ss > 0.0) step = std::clamp(ss / sy, 1e-14, 1e12);
    }

    std::vector<double> next(p.k);
    DualEval next_eval;
    for (;;) {
      double quad = 0.0, lin = 0.0;
      for (std::size_t j = 0; j < p.k; ++j) {
        next[j] = std::max(0.0, lambda[j] - step * cur.gradient[j]);
        double d = next[j] - lambda[j];
        lin += cur.gradient[j] * d;
        quad += d * d;
      }
      next_eval = eval_dual(p, next, eta);
      if (next_eval.value <= cur.value + lin + quad / (2.0 * step) + 1e-12 * std::abs(cur.value))
        break;
      step *= 0.5;
      if (step < 1e-16) break;  // flat to machine precision; accept and let pg decide
    }

    prev_lambda = std::move(lambda);
    prev_grad = std::move(cur.gradient);
    cur.gradient = std::move(next_eval.gradient);
    cur.value = next_eval.value;
    lambda = std::move(next);
    pg = projected_gradient_norm(lambda, cur.gradient);
  }
  throw convergence_error("dual solve did not reach tolerance", pg);
}

RoundedDual round_dual(const DualVector& lambda, double alpha, std::size_t k) {
  if (!(alpha > 0.0)) throw param_error("alpha must be positive");
  if (lambda.size() != k) throw param_error("dual size must equal k");
  lambda.validate();
  const double unit = alpha / std::sqrt(static_cast<double>(k));

  std::vector<u128> multiples(k);
  u128 max_multiple = 0;
  for (std::size_t j = 0; j < k; ++j) {
    // Nearest multiple, ties toward +infinity.
    double q = std::floor(lambda.lambda[j] / unit + 0.5);
    multiples[j] = static_cast<u128>(q);
    max_multiple = std::max(max_multiple, multiples[j]);
  }
  const unsigned width = bit_width_u128(max_multiple);

  RoundedDual out;
  out.rounded.lambda.resize(k);
  out.message.append_field(width, 8);
  for (std::size_t j = 0; j < k; ++j) {
    out.message.append_field(multiples[j], width);
    out.rounded.lambda[j] = static_cast<double>(multiples[j]) * unit;
  }
  return out;
}

DualVector decode_dual(const Message& msg, double alpha, std::size_t k) {
  if (!(alpha > 0.0)) throw param_error("alpha must be positive");
  const double unit = alpha / std::sqrt(static_cast<double>(k));
  BitReader reader(msg);
  const unsigned width = static_cast<unsigned>(reader.read_field(8));
  if (msg.bit_length() != 8 + k * width) throw param_error("dual message has wrong length");
  DualVector out;
  out.lambda.resize(k);
  for (std::size_t j = 0; j < k; ++j)
    out.lambda[j] = static_cast<double>(reader.read_field(width)) * unit;
  return out;
}

double rec_alpha(double eta, double eps, std::size_t n, std::size_t k) {
  if (!(eta > 0.0) || !(eps > 0.0)) throw param_error("eta and eps must be positive");
  return eta * eps * eps / (4.0 * std::sqrt(static_cast<double>(n) * static_cast<double>(k)));
}

FractionalAssignment decode_fractional(const MatchingInstance& inst, const DualVector& lambda,
                                       double eta) {
  FractionalAssignment out;
  out.x.resize(inst.n);
  for (std::size_t i = 0; i < inst.n; ++i)
    out.x[i] = agent_best_response({inst.row(i), inst.k}, lambda.lambda, eta);
  return out;
}

RecResult rec_protocol(const MatchingInstance& inst, double eta, double eps,
                       const DualSolveOptions& opts) {
  inst.validate();
  const double alpha = rec_alpha(eta, eps, inst.n, inst.k);
  SeparableProgram program = matching_program(inst);

  RecResult out;
  out.dual = solve_regularized_dual(program, eta, opts);
  RoundedDual rounded = round_dual(out.dual, alpha, inst.k);
  out.dual_rounded = std::move(rounded.rounded);
  out.message = std::move(rounded.message);
  out.assignment = decode_fractional(inst, out.dual_rounded, eta);
  return out;
}

Assignment independent_rounding(const FractionalAssignment& x, std::uint64_t seed) {
  Assignment a(x.x.size(), -1);
  for (std::size_t i = 0; i < x.x.size(); ++i) {
    const auto& row = x.x[i];
    double sum = 0.0;
    for (double v : row) {
      if (v < -1e-12) throw param_error("negative assignment probability");
      sum += v;
    }
    if (sum > 1.0 + 1e-9) throw param_error("row sum exceeds 1");
    Rng rng = agent_stream(seed, i);
    double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      cum += row[j];
      if (u < cum) {
        a[i] = static_cast<int>(j);
        break;
      }
    }
  }
  return a;
}

double fractional_welfare(const FractionalAssignment& x, const MatchingInstance& inst) {
  double v = 0.0;
  for (std::size_t i = 0; i < inst.n; ++i)
    for (std::size_t j = 0; j < inst.k; ++j)
      v += static_cast<double>(inst.value(i, j)) * x.x[i][j];
  return v;
}

}  // namespace coordc
